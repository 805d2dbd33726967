// Session client: sequences outbound messages over a pluggable transport.
// While disconnected, outbound messages queue for up to a grace window and
// flush on reconnect; anything older is dropped and reported, so a stalled
// link degrades into a visible banner instead of a silent stream gap.

import {
    Features,
    HandUpdateMessage,
    InboundMessage,
    Mode,
    OutboundMessage,
    ProtocolError,
    parseInbound,
} from "./protocol.js";

export interface Transport {
    send(text: string): void;
    isOpen(): boolean;
    onMessage(cb: (text: string) => void): void;
    onOpen(cb: () => void): void;
    onClose(cb: () => void): void;
}

export interface ClientEvents {
    inbound(msg: InboundMessage): void;
    protocolError(err: ProtocolError): void;
    queuedDropped(count: number): void;
    connection(open: boolean): void;
}

export class SessionClient {
    private seq = 0;
    private queue: { text: string; at: number }[] = [];
    readonly sentSeqs = new Set<number>();

    constructor(
        private transport: Transport,
        private events: Partial<ClientEvents> = {},
        private queueWindowMs = 1000,
        private now: () => number = () => Date.now(),
    ) {
        transport.onMessage((text) => this.receive(text));
        transport.onOpen(() => {
            this.events.connection?.(true);
            this.flush();
        });
        transport.onClose(() => this.events.connection?.(false));
    }

    hello(model: string, mode: Mode, bounds: string): void {
        this.dispatch({ type: "hello", model, mode, bounds });
    }

    sendHandUpdate(features: Features, intent?: number[]): number {
        const seq = this.seq++;
        const msg: HandUpdateMessage = { type: "hand_update", seq, features };
        if (intent !== undefined) msg.intent = intent;
        this.sentSeqs.add(seq);
        this.dispatch(msg);
        return seq;
    }

    setMode(mode: Mode): void {
        this.dispatch({ type: "set_mode", mode });
    }

    get lastSentSeq(): number | null {
        return this.seq === 0 ? null : this.seq - 1;
    }

    private dispatch(msg: OutboundMessage): void {
        const text = JSON.stringify(msg);
        if (this.transport.isOpen()) {
            this.transport.send(text);
        } else {
            this.queue.push({ text, at: this.now() });
        }
    }

    private flush(): void {
        const cutoff = this.now() - this.queueWindowMs;
        const fresh = this.queue.filter((q) => q.at >= cutoff);
        const dropped = this.queue.length - fresh.length;
        this.queue = [];
        if (dropped > 0) this.events.queuedDropped?.(dropped);
        for (const q of fresh) this.transport.send(q.text);
    }

    private receive(text: string): void {
        let msg: InboundMessage;
        try {
            msg = parseInbound(text);
        } catch (err) {
            if (err instanceof ProtocolError) {
                this.events.protocolError?.(err);
                return;
            }
            throw err;
        }
        this.events.inbound?.(msg);
    }
}
