// Browser entry point: wires the session client and console state machine
// to sliders, a draggable hand proxy, the side-by-side 3-D view, intent
// bars, and the numeric panel. Rendering is latest-wins: at most one render
// per animation frame regardless of how fast solutions arrive.

import { SessionClient, Transport } from "./client.js";
import { Features, Mode, MODES, combinationLabel } from "./protocol.js";
import { Camera, handGlyph, project } from "./scene.js";
import { Bounds, featuresFromSliders, sliderSpecs } from "./sliders.js";
import {
    ConsoleState,
    initialState,
    onConnection,
    onHandSent,
    onInbound,
    onModeSelected,
    onSessionStarted,
    withBanner,
} from "./state.js";
import { intentBars, numericPanel } from "./view.js";

interface ModelInfo {
    id: string;
    embodiment: string;
    d: number;
    n_apertures: number | null;
    tasks: string[];
    is_human_default: boolean;
}

interface BoundsInfo extends Bounds {
    id: string;
}

function byId<T extends HTMLElement>(id: string): T {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
}

class WebSocketTransport implements Transport {
    private ws: WebSocket;
    private messageCb: ((text: string) => void) | null = null;
    private openCb: (() => void) | null = null;
    private closeCb: (() => void) | null = null;

    constructor(url: string) {
        this.ws = new WebSocket(url);
        this.ws.onmessage = (ev) => this.messageCb?.(String(ev.data));
        this.ws.onopen = () => this.openCb?.();
        this.ws.onclose = () => this.closeCb?.();
    }

    send(text: string): void {
        this.ws.send(text);
    }

    isOpen(): boolean {
        return this.ws.readyState === WebSocket.OPEN;
    }

    onMessage(cb: (text: string) => void): void {
        this.messageCb = cb;
    }

    onOpen(cb: () => void): void {
        this.openCb = cb;
    }

    onClose(cb: () => void): void {
        this.closeCb = cb;
    }
}

async function fetchJson<T>(path: string): Promise<T> {
    const resp = await fetch(path);
    if (!resp.ok) throw new Error(`${path}: HTTP ${resp.status}`);
    return (await resp.json()) as T;
}

class ConsoleApp {
    state: ConsoleState = initialState();
    private dirty = false;
    private sliders: number[] = [];
    private sliderInputs: HTMLInputElement[] = [];
    private client!: SessionClient;
    private model!: ModelInfo;
    private bounds!: BoundsInfo;

    async start(): Promise<void> {
        const models = await fetchJson<ModelInfo[]>("/models");
        const boundsSets = await fetchJson<BoundsInfo[]>("/bounds");
        const robot = models.find((m) => !m.is_human_default) ?? models[0];
        if (!robot || boundsSets.length === 0) {
            this.update((s) =>
                withBanner(s, { kind: "error", message: "service has no models or bounds" }),
            );
            return;
        }
        this.model = robot;
        this.bounds = boundsSets[0]!;
        byId<HTMLElement>("model-name").textContent =
            `${robot.id} (d=${robot.d}, tasks: ${robot.tasks.join(", ")})`;

        this.buildModeButtons();
        this.buildSliders();
        this.connect();
        this.renderLoop();
    }

    private update(fn: (s: ConsoleState) => ConsoleState): void {
        this.state = fn(this.state);
        this.dirty = true;
    }

    private connect(): void {
        const scheme = location.protocol === "https:" ? "wss" : "ws";
        const transport = new WebSocketTransport(`${scheme}://${location.host}/session`);
        this.client = new SessionClient(transport, {
            inbound: (msg) => this.update((s) => onInbound(s, msg)),
            protocolError: (err) =>
                this.update((s) =>
                    withBanner(s, { kind: "error", message: err.message, raw: err.raw }),
                ),
            queuedDropped: (count) =>
                this.update((s) =>
                    withBanner(s, {
                        kind: "warning",
                        message: `dropped ${count} queued frame(s) older than 1s`,
                    }),
                ),
            connection: (open) => {
                this.update((s) => onConnection(s, open));
                if (open) {
                    this.client.hello(this.model.id, this.state.selectedMode, this.bounds.id);
                    this.update((s) =>
                        onSessionStarted(s, this.model.id, s.selectedMode, this.bounds.id),
                    );
                    this.pushFrame();
                }
            },
        });
    }

    private buildModeButtons(): void {
        const holder = byId<HTMLElement>("modes");
        for (const mode of MODES) {
            const btn = document.createElement("button");
            btn.textContent = mode;
            btn.dataset.mode = mode;
            btn.onclick = () => {
                this.client.setMode(mode);
                this.update((s) => onModeSelected(s, mode));
            };
            holder.appendChild(btn);
        }
    }

    private buildSliders(): void {
        const holder = byId<HTMLElement>("sliders");
        const nApertures = this.model.n_apertures ?? 0;
        const specs = sliderSpecs(nApertures);
        this.sliders = specs.map(() => 0.5);
        for (const spec of specs) {
            const row = document.createElement("label");
            row.className = "slider-row";
            const name = document.createElement("span");
            name.textContent = spec.label;
            const input = document.createElement("input");
            input.type = "range";
            input.min = "0";
            input.max = "1";
            input.step = "0.001";
            input.value = "0.5";
            input.oninput = () => {
                this.sliders[spec.index] = Number(input.value);
                this.pushFrame();
            };
            row.append(name, input);
            holder.appendChild(row);
            this.sliderInputs.push(input);
        }
        this.bindCanvasDrag();
    }

    private bindCanvasDrag(): void {
        // dragging the hand proxy nudges the x/z position sliders
        const canvas = byId<HTMLCanvasElement>("scene");
        let dragging = false;
        let last: [number, number] | null = null;
        canvas.onpointerdown = (ev) => {
            dragging = true;
            last = [ev.offsetX, ev.offsetY];
            canvas.setPointerCapture(ev.pointerId);
        };
        canvas.onpointerup = () => {
            dragging = false;
            last = null;
        };
        canvas.onpointermove = (ev) => {
            if (!dragging || !last) return;
            const dx = (ev.offsetX - last[0]) / canvas.width;
            const dy = (ev.offsetY - last[1]) / canvas.height;
            last = [ev.offsetX, ev.offsetY];
            this.nudgeSlider(0, dx);
            this.nudgeSlider(2, -dy);
            this.pushFrame();
        };
    }

    private nudgeSlider(index: number, delta: number): void {
        const next = Math.min(1, Math.max(0, (this.sliders[index] ?? 0.5) + delta));
        this.sliders[index] = next;
        const input = this.sliderInputs[index];
        if (input) input.value = String(next);
    }

    private pushFrame(): void {
        const nApertures = this.model.n_apertures ?? 0;
        const features = featuresFromSliders(this.sliders, this.bounds, nApertures);
        const seq = this.client.sendHandUpdate(features);
        this.update((s) => onHandSent(s, seq, features));
    }

    private renderLoop(): void {
        const tick = () => {
            if (this.dirty) {
                this.dirty = false;
                this.render();
            }
            requestAnimationFrame(tick);
        };
        requestAnimationFrame(tick);
    }

    private render(): void {
        const s = this.state;
        byId<HTMLElement>("connection").textContent = s.connection;
        byId<HTMLElement>("drop-notice").hidden = !s.dropNotice;
        byId<HTMLElement>("dropped-count").textContent = String(s.droppedFrames);

        const banners = byId<HTMLElement>("banners");
        banners.replaceChildren(
            ...s.banners.slice(-4).map((b) => {
                const el = document.createElement("div");
                el.className = `banner ${b.kind}`;
                el.textContent = b.raw ? `${b.message} — payload: ${b.raw}` : b.message;
                return el;
            }),
        );

        for (const btn of byId<HTMLElement>("modes").querySelectorAll("button")) {
            const mode = btn.dataset.mode as Mode;
            btn.classList.toggle("active", s.displayedMode === mode);
            btn.classList.toggle("pending", s.pendingMode === mode);
        }

        this.renderNumericPanel();
        this.renderIntentBars();
        this.renderScene();
    }

    private renderNumericPanel(): void {
        const sol = this.state.latestSolution;
        const panelEl = byId<HTMLElement>("numeric-panel");
        if (!sol) {
            panelEl.textContent = "no solution yet";
            return;
        }
        const panel = numericPanel(sol);
        const fmt = (v: number | null) => (v === null ? "-" : v.toPrecision(6));
        panelEl.replaceChildren(
            ...Object.entries({
                seq: String(panel.seq),
                mode: panel.mode,
                objective: fmt(panel.objective),
                "intent term": fmt(panel.intentTerm),
                "mimic term": fmt(panel.mimicTerm),
                gamma: fmt(panel.gamma),
                "lambda range":
                    panel.lambdaMin === null
                        ? "-"
                        : `[${fmt(panel.lambdaMin)}, ${fmt(panel.lambdaMax)}]`,
            }).map(([k, v]) => {
                const row = document.createElement("div");
                row.className = "stat";
                row.innerHTML = `<span>${k}</span><b>${v}</b>`;
                return row;
            }),
        );
    }

    private renderIntentBars(): void {
        const sol = this.state.latestSolution;
        const holder = byId<HTMLElement>("intent-bars");
        if (!sol) return;
        holder.replaceChildren(
            ...intentBars(sol.p_h, this.model.tasks).map((bar) => {
                const row = document.createElement("div");
                row.className = "bar-row";
                const fill = document.createElement("div");
                fill.className = "bar-fill";
                fill.style.width = `${(100 * bar.value).toFixed(1)}%`;
                const label = document.createElement("span");
                label.textContent = `${bar.label} ${bar.value.toFixed(3)}`;
                row.append(fill, label);
                return row;
            }),
        );
    }

    private renderScene(): void {
        const canvas = byId<HTMLCanvasElement>("scene");
        const ctx = canvas.getContext("2d");
        if (!ctx) return;
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        const cam: Camera = {
            yaw: 0.6,
            pitch: 0.5,
            scale: canvas.width * 0.9,
            cx: canvas.width / 2,
            cy: canvas.height * 0.72,
        };
        const draw = (features: Features, stroke: string, width: number) => {
            ctx.lineWidth = width;
            for (const seg of handGlyph(features, stroke)) {
                ctx.strokeStyle = seg.stroke === stroke ? stroke : seg.stroke;
                ctx.beginPath();
                const [ax, ay] = project(seg.a, cam);
                const [bx, by] = project(seg.b, cam);
                ctx.moveTo(ax, ay);
                ctx.lineTo(bx, by);
                ctx.stroke();
            }
        };
        if (this.state.currentFrame) draw(this.state.currentFrame, "#d8d8d8", 2);
        const sol = this.state.latestSolution;
        if (sol) draw(sol.robot_features, "#58c1b8", 3);
        const label = byId<HTMLElement>("task-label");
        if (sol) {
            const top = sol.p_r.indexOf(Math.max(...sol.p_r));
            label.textContent = `robot grasp: ${combinationLabel(this.model.tasks, top)}`;
        }
    }
}

new ConsoleApp().start().catch((err) => {
    const banners = document.getElementById("banners");
    if (banners) banners.textContent = String(err);
});
