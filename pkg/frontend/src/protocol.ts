// Wire types for the telegrasp session protocol, plus strict decoding of
// inbound payloads. Anything that fails decoding is surfaced with the raw
// payload attached so the UI can show it in an error banner.

export const MODES = ["mimic", "intent_only", "knitro"] as const;
export type Mode = (typeof MODES)[number];

export interface StructuredFeatures {
    position: number[];
    orientation: number[];
    apertures: number[];
}

export interface RawFeatures {
    values: number[];
}

export type Features = StructuredFeatures | RawFeatures;

export interface HelloMessage {
    type: "hello";
    model: string;
    mode: Mode;
    bounds: string;
}

export interface HandUpdateMessage {
    type: "hand_update";
    seq: number;
    features: Features;
    intent?: number[];
}

export interface SetModeMessage {
    type: "set_mode";
    mode: Mode;
}

export type OutboundMessage = HelloMessage | HandUpdateMessage | SetModeMessage;

export interface SolutionMessage {
    type: "solution";
    seq: number;
    mode: Mode;
    robot_features: Features;
    p_h: number[];
    p_r: number[];
    lambda: number[] | null;
    gamma: number | null;
    intent_term: number;
    mimic_term: number;
    objective: number;
}

export interface ErrorMessage {
    type: "error";
    seq?: number;
    message: string;
}

export type InboundMessage = SolutionMessage | ErrorMessage;

export class ProtocolError extends Error {
    constructor(message: string, readonly raw: string) {
        super(message);
        this.name = "ProtocolError";
    }
}

function isNumberArray(v: unknown): v is number[] {
    return Array.isArray(v) && v.every((x) => typeof x === "number" && Number.isFinite(x));
}

function isMode(v: unknown): v is Mode {
    return typeof v === "string" && (MODES as readonly string[]).includes(v);
}

function isFeatures(v: unknown): v is Features {
    if (typeof v !== "object" || v === null) return false;
    const o = v as Record<string, unknown>;
    if (isNumberArray(o.values)) return true;
    return (
        isNumberArray(o.position) &&
        isNumberArray(o.orientation) &&
        isNumberArray(o.apertures)
    );
}

export function featureArray(f: Features): number[] {
    if ("values" in f) return f.values;
    return [...f.position, ...f.orientation, ...f.apertures];
}

export function parseInbound(raw: string): InboundMessage {
    let data: unknown;
    try {
        data = JSON.parse(raw);
    } catch {
        throw new ProtocolError("payload is not valid JSON", raw);
    }
    if (typeof data !== "object" || data === null) {
        throw new ProtocolError("payload is not an object", raw);
    }
    const o = data as Record<string, unknown>;
    if (o.type === "error") {
        if (typeof o.message !== "string") {
            throw new ProtocolError("error message missing", raw);
        }
        const out: ErrorMessage = { type: "error", message: o.message };
        if (typeof o.seq === "number") out.seq = o.seq;
        return out;
    }
    if (o.type !== "solution") {
        throw new ProtocolError(`unknown message type ${String(o.type)}`, raw);
    }
    if (typeof o.seq !== "number") throw new ProtocolError("solution lacks seq", raw);
    if (!isMode(o.mode)) throw new ProtocolError("solution lacks a valid mode", raw);
    if (!isFeatures(o.robot_features)) {
        throw new ProtocolError("solution lacks robot_features", raw);
    }
    if (!isNumberArray(o.p_h) || !isNumberArray(o.p_r)) {
        throw new ProtocolError("solution lacks p_h/p_r", raw);
    }
    const lambdaOk = o.lambda === null || isNumberArray(o.lambda);
    const gammaOk = o.gamma === null || typeof o.gamma === "number";
    if (!lambdaOk || !gammaOk) {
        throw new ProtocolError("solution has malformed weights", raw);
    }
    for (const key of ["intent_term", "mimic_term", "objective"]) {
        if (typeof o[key] !== "number") {
            throw new ProtocolError(`solution lacks ${key}`, raw);
        }
    }
    return {
        type: "solution",
        seq: o.seq,
        mode: o.mode,
        robot_features: o.robot_features,
        p_h: o.p_h,
        p_r: o.p_r,
        lambda: o.lambda as number[] | null,
        gamma: o.gamma as number | null,
        intent_term: o.intent_term as number,
        mimic_term: o.mimic_term as number,
        objective: o.objective as number,
    };
}

// Set-notation label for a task-combination bitmask, e.g. "{use, handover}".
export function combinationLabel(taskNames: string[], mask: number): string {
    const members = taskNames.filter((_, i) => (mask >> i) & 1);
    return `{${members.join(", ")}}`;
}
