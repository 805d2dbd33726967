// Console state machine. Pure update functions so the whole operator loop
// is testable without a DOM: sent frames, the latest rendered solution,
// mode switching (pending until a solution echoes it), the rolling intent
// history, and the coalesced-drop notice.

import type { Features, InboundMessage, Mode, SolutionMessage } from "./protocol.js";

export const INTENT_HISTORY_LIMIT = 100;

export interface Banner {
    kind: "error" | "warning";
    message: string;
    raw?: string;
}

export interface ConsoleState {
    connection: "connecting" | "open" | "closed";
    model: string | null;
    bounds: string | null;
    selectedMode: Mode;
    pendingMode: Mode | null;
    displayedMode: Mode | null;
    currentFrame: Features | null; // always the last frame sent
    lastSentSeq: number | null;
    lastRenderedSeq: number | null;
    latestSolution: SolutionMessage | null;
    intentHistory: number[][]; // last N p_h vectors
    droppedFrames: number; // outbound seqs that never came back
    dropNotice: boolean;
    banners: Banner[];
    sentSeqs: Set<number>;
}

export function initialState(mode: Mode = "mimic"): ConsoleState {
    return {
        connection: "connecting",
        model: null,
        bounds: null,
        selectedMode: mode,
        pendingMode: null,
        displayedMode: null,
        currentFrame: null,
        lastSentSeq: null,
        lastRenderedSeq: null,
        latestSolution: null,
        intentHistory: [],
        droppedFrames: 0,
        dropNotice: false,
        banners: [],
        sentSeqs: new Set(),
    };
}

export function onConnection(state: ConsoleState, open: boolean): ConsoleState {
    return { ...state, connection: open ? "open" : "closed" };
}

export function onSessionStarted(
    state: ConsoleState,
    model: string,
    mode: Mode,
    bounds: string,
): ConsoleState {
    return { ...state, model, bounds, selectedMode: mode, pendingMode: null };
}

export function onHandSent(
    state: ConsoleState,
    seq: number,
    frame: Features,
): ConsoleState {
    const sentSeqs = new Set(state.sentSeqs);
    sentSeqs.add(seq);
    return { ...state, currentFrame: frame, lastSentSeq: seq, sentSeqs };
}

export function onModeSelected(state: ConsoleState, mode: Mode): ConsoleState {
    // rapid double-switch: the latest selection is the one awaiting its echo
    return { ...state, selectedMode: mode, pendingMode: mode };
}

export function onInbound(state: ConsoleState, msg: InboundMessage): ConsoleState {
    if (msg.type === "error") {
        return withBanner(state, { kind: "error", message: msg.message });
    }
    return onSolution(state, msg);
}

function onSolution(state: ConsoleState, msg: SolutionMessage): ConsoleState {
    if (!state.sentSeqs.has(msg.seq)) {
        // never render a solution this console did not ask for
        return withBanner(state, {
            kind: "error",
            message: `solution for unknown seq ${msg.seq}`,
        });
    }
    const gap =
        state.lastRenderedSeq === null ? msg.seq : msg.seq - state.lastRenderedSeq - 1;
    const dropped = Math.max(gap, 0);
    const intentHistory = [...state.intentHistory, msg.p_h];
    if (intentHistory.length > INTENT_HISTORY_LIMIT) {
        intentHistory.splice(0, intentHistory.length - INTENT_HISTORY_LIMIT);
    }
    return {
        ...state,
        latestSolution: msg,
        displayedMode: msg.mode,
        pendingMode: state.pendingMode === msg.mode ? null : state.pendingMode,
        lastRenderedSeq: msg.seq,
        intentHistory,
        droppedFrames: state.droppedFrames + dropped,
        dropNotice: dropped > 0,
    };
}

export function withBanner(state: ConsoleState, banner: Banner): ConsoleState {
    return { ...state, banners: [...state.banners, banner] };
}

export function clearBanners(state: ConsoleState): ConsoleState {
    return { ...state, banners: [] };
}
