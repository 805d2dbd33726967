"""Live shared-control endpoint for operator consoles.

HTTP surface: ``GET /models``, ``GET /bounds``, ``POST /solve``,
``POST /intent``. Streaming surface: ``WS /session`` speaking JSON messages
(``hello`` handshake, then ``hand_update`` frames and ``set_mode`` switches
inbound; ``solution`` and ``error`` messages outbound). Each session is
isolated and processes its frames in order; with a positive rate limit,
frames arriving faster than the budget are coalesced latest-wins, so some
sequence numbers are never answered (the drop policy). A rate limit of 0
disables coalescing and answers every frame.

The math is stateless: solutions depend only on the message, the loaded
models, and the solver configuration, so identical streams produce identical
outputs regardless of interleaving. Models are immutable after load; a
reload swaps the whole registry object atomically.
"""

from __future__ import annotations

import asyncio
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .controllers import (
    MODES,
    Solution,
    SolveRequest,
    SolverConfig,
    WorkspaceBounds,
    solve,
)
from .divergence import ArbitrationWeights, weights_between
from .errors import TelegraspError
from .features import feature_payload, parse_feature_payload
from .intent import estimate_intent, powerset_target
from .model import GraspModel, load_model

__all__ = ["ModelRegistry", "load_registry", "create_app"]


@dataclass
class ModelRegistry:
    """Loaded models keyed by id, plus the designated human-side model."""

    models: dict[str, GraspModel]
    human_id: str | None = None

    def get(self, model_id: str) -> GraspModel:
        return self.models[model_id]

    def human(self) -> GraspModel | None:
        if self.human_id is None:
            return None
        return self.models.get(self.human_id)

    def catalog(self) -> list[dict]:
        out = []
        for model_id in sorted(self.models):
            m = self.models[model_id]
            out.append({
                "id": model_id,
                "embodiment": m.embodiment,
                "d": m.d,
                "n_apertures": m.n_apertures,
                "tasks": list(m.tasks.names),
                "combinations": [c.combination for c in m.classes],
                "combination_labels": [
                    m.tasks.label(c.combination) for c in m.classes
                ],
                "is_human_default": model_id == self.human_id,
            })
        return out


def load_registry(models_dir: str, human_id: str | None = None) -> ModelRegistry:
    """Load every ``*.json`` model in a directory; ids are file stems."""
    models: dict[str, GraspModel] = {}
    for path in sorted(Path(models_dir).glob("*.json")):
        models[path.stem] = load_model(path)
    if human_id is not None:
        if human_id not in models:
            raise TelegraspError(f"human model id {human_id!r} not in {models_dir}")
    else:
        human_id = next(
            (mid for mid in sorted(models) if models[mid].embodiment == "human"),
            None,
        )
    return ModelRegistry(models=models, human_id=human_id)


class SolveBody(BaseModel):
    model: str
    mode: str
    features: dict
    intent: list[float] | None = None
    target: list[float] | None = None
    bounds: str | dict | None = None
    weights_override: dict | None = None


class IntentBody(BaseModel):
    features: dict
    model: str | None = None


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": code, "message": message, **extra})


@dataclass
class _SessionState:
    """Per-connection state: selected model/mode/bounds and recent solutions."""

    model_id: str
    mode: str
    bounds_id: str
    recent: deque = field(default_factory=lambda: deque(maxlen=100))


class _Engine:
    """Shared solve plumbing for the HTTP and WS surfaces."""

    def __init__(self, registry, bounds_sets, solver_config, ring_size):
        self.registry = registry
        self.bounds_sets = bounds_sets
        self.solver_config = solver_config
        self.ring_size = ring_size
        # models never change after load, so entries never go stale
        self._weights_cache: dict[tuple, ArbitrationWeights] = {}

    def resolve_bounds(self, key: str | dict | None) -> WorkspaceBounds:
        if isinstance(key, dict):
            bounds = WorkspaceBounds(lower=key.get("lower"), upper=key.get("upper"))
            bounds.validate()
            return bounds
        if key is None:
            if len(self.bounds_sets) == 1:
                return next(iter(self.bounds_sets.values()))
            key = "default"
        if key not in self.bounds_sets:
            raise KeyError(key)
        return self.bounds_sets[key]

    def intent_for(self, model: GraspModel, values: np.ndarray,
                   supplied: list[float] | None) -> np.ndarray:
        if supplied is not None:
            return np.asarray(supplied, dtype=float)
        human = self.registry.human()
        if human is None:
            raise TelegraspError(
                "no intent supplied and the registry has no human model"
            )
        return estimate_intent(human, values)

    def cached_weights(self, robot_id: str, robot: GraspModel,
                       p_h: np.ndarray) -> ArbitrationWeights | None:
        human = self.registry.human()
        if human is None:
            return None
        combination = int(np.argmax(p_h))
        cfg = self.solver_config
        key = (self.registry.human_id, robot_id, combination,
               cfg.w_min, cfg.w_max, cfg.per_task_weights)
        if key not in self._weights_cache:
            self._weights_cache[key] = weights_between(
                human, robot, combination,
                w_min=cfg.w_min, w_max=cfg.w_max,
                per_task=cfg.per_task_weights,
                pooled_fallback=cfg.pooled_fallback,
            )
        return self._weights_cache[key]

    def solve_frame(self, model_id: str, mode: str, features: dict,
                    intent: list[float] | None,
                    bounds_key: str | dict | None,
                    target: list[float] | None = None,
                    weights_override: dict | None = None) -> tuple[Solution, GraspModel]:
        robot = self.registry.get(model_id)
        bounds = self.resolve_bounds(bounds_key)
        values, _ = parse_feature_payload(features)
        weights = None
        if weights_override is not None:
            weights = ArbitrationWeights.from_raw(
                weights_override["lambda"], float(weights_override["gamma"]),
                w_min=self.solver_config.w_min, w_max=self.solver_config.w_max,
            )
        request = SolveRequest(
            mode=mode,
            human=values,
            robot_model=robot,
            bounds=bounds,
            intent=None if target is not None else self.intent_for(
                robot, values, intent),
            target=target,
            weights_override=weights,
            config=self.solver_config,
        )
        if mode == "knitro" and weights is None:
            p_h = (np.asarray(target, dtype=float) if target is not None
                   else powerset_target(request.intent, robot.tasks))
            cached = self.cached_weights(model_id, robot, p_h)
            if cached is None:
                raise TelegraspError(
                    "knitro mode needs a human model in the registry or an "
                    "explicit weights_override"
                )
            request.weights_override = cached
        return solve(request), robot


def create_app(
    registry: ModelRegistry,
    bounds_sets: dict[str, WorkspaceBounds],
    *,
    rate_limit: float = 30.0,
    ring_size: int = 100,
    solver_config: SolverConfig | None = None,
    console_dir: str | None = None,
) -> FastAPI:
    """Build the service application around a loaded model registry.

    ``console_dir`` optionally mounts a built operator-console bundle at the
    root path, next to the API routes.
    """
    app = FastAPI(title="telegrasp service")
    engine = _Engine(registry, bounds_sets, solver_config or SolverConfig(),
                     ring_size)
    app.state.engine = engine
    app.state.rate_limit = rate_limit

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        fields = [
            {"loc": ".".join(str(p) for p in err.get("loc", [])),
             "message": err.get("msg", "invalid")}
            for err in exc.errors()
        ]
        return _error_response(400, "validation", "invalid request body",
                               fields=fields)

    @app.get("/models")
    async def get_models():
        return engine.registry.catalog()

    @app.get("/bounds")
    async def get_bounds():
        return [
            {"id": name, **bounds.to_dict()}
            for name, bounds in sorted(engine.bounds_sets.items())
        ]

    @app.post("/solve")
    async def post_solve(body: SolveBody):
        if body.mode not in MODES:
            return _error_response(400, "validation",
                                   f"unknown mode {body.mode!r}")
        try:
            solution, robot = engine.solve_frame(
                body.model, body.mode, body.features, body.intent,
                body.bounds, target=body.target,
                weights_override=body.weights_override,
            )
        except KeyError as exc:
            return _error_response(404, "unknown-id",
                                   f"unknown model or bounds id {exc}")
        except TelegraspError as exc:
            return _error_response(400, getattr(exc, "code", "error"), str(exc))
        return solution.to_dict(robot.n_apertures)

    @app.post("/intent")
    async def post_intent(body: IntentBody):
        model_id = body.model if body.model is not None else engine.registry.human_id
        if model_id is None:
            return _error_response(400, "no-human-model",
                                   "registry has no human model")
        if model_id not in engine.registry.models:
            return _error_response(404, "unknown-id",
                                   f"unknown model id {model_id!r}")
        model = engine.registry.get(model_id)
        try:
            values, _ = parse_feature_payload(body.features)
            intent = estimate_intent(model, values)
        except TelegraspError as exc:
            return _error_response(400, getattr(exc, "code", "error"), str(exc))
        return {
            "model": model_id,
            "intent": [float(v) for v in intent],
            "target": [float(v) for v in powerset_target(intent, model.tasks)],
        }

    @app.websocket("/session")
    async def ws_session(ws: WebSocket):
        await ws.accept()
        if app.state.rate_limit > 0:
            await _run_session_coalescing(ws, engine, app.state.rate_limit)
        else:
            await _run_session_lossless(ws, engine)

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True),
                  name="console")

    return app


def _solution_message(seq, sol: Solution, n_apertures) -> dict:
    w = sol.weights
    return {
        "type": "solution",
        "seq": seq,
        "mode": sol.meta.mode,
        "robot_features": feature_payload(sol.robot, n_apertures),
        "p_h": [float(v) for v in sol.p_h],
        "p_r": [float(v) for v in sol.p_r],
        "lambda": [float(v) for v in w.clamped_lambda] if w is not None else None,
        "gamma": float(w.clamped_gamma) if w is not None else None,
        "intent_term": float(sol.intent_term),
        "mimic_term": float(sol.mimic_term),
        "objective": float(sol.objective),
    }


def _error_message(message: str, seq=None) -> dict:
    msg = {"type": "error", "message": message}
    if seq is not None:
        msg["seq"] = seq
    return msg


class _SessionCore:
    """Protocol handling shared by both session loops."""

    def __init__(self, engine: _Engine):
        self.engine = engine
        self.state: _SessionState | None = None

    def handle_control(self, msg: dict) -> dict | None:
        """Process hello / set_mode; returns an error message or None."""
        kind = msg.get("type")
        if kind == "hello":
            model_id = msg.get("model")
            mode = msg.get("mode")
            bounds_id = msg.get("bounds")
            if model_id not in self.engine.registry.models:
                return _error_message(f"unknown model id {model_id!r}")
            if mode not in MODES:
                return _error_message(f"unknown mode {mode!r}")
            try:
                self.engine.resolve_bounds(bounds_id)
            except KeyError:
                return _error_message(f"unknown bounds id {bounds_id!r}")
            self.state = _SessionState(
                model_id=model_id, mode=mode,
                bounds_id=bounds_id if bounds_id is not None else "default",
            )
            self.state.recent = deque(maxlen=self.engine.ring_size)
            return None
        if kind == "set_mode":
            if self.state is None:
                return _error_message("no session: send hello first")
            mode = msg.get("mode")
            if mode not in MODES:
                return _error_message(f"unknown mode {mode!r}")
            self.state.mode = mode
            return None
        return _error_message(f"unknown message type {msg.get('type')!r}")

    def handle_frame(self, msg: dict) -> dict:
        if self.state is None:
            return _error_message("no session: send hello first", msg.get("seq"))
        seq = msg.get("seq")
        if not isinstance(seq, int):
            return _error_message("hand_update needs an integer seq", seq)
        features = msg.get("features")
        if not isinstance(features, dict):
            return _error_message("hand_update needs a features object", seq)
        try:
            solution, robot = self.engine.solve_frame(
                self.state.model_id, self.state.mode, features,
                msg.get("intent"), msg.get("bounds", self.state.bounds_id),
            )
        except (TelegraspError, ValueError, KeyError) as exc:
            return _error_message(str(exc), seq)
        self.state.recent.append(solution)
        return _solution_message(seq, solution, robot.n_apertures)


async def _receive_message(ws: WebSocket) -> dict | str:
    """Next parsed message, or an error string for malformed payloads."""
    text = await ws.receive_text()
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as exc:
        return f"malformed JSON: {exc.msg}"
    if not isinstance(msg, dict):
        return "messages must be JSON objects"
    return msg


async def _run_session_lossless(ws: WebSocket, engine: _Engine) -> None:
    """Answer every frame in arrival order (rate limit disabled)."""
    core = _SessionCore(engine)
    try:
        while True:
            msg = await _receive_message(ws)
            if isinstance(msg, str):
                await ws.send_json(_error_message(msg))
                continue
            if msg.get("type") == "hand_update":
                await ws.send_json(core.handle_frame(msg))
            else:
                reply = core.handle_control(msg)
                if reply is not None:
                    await ws.send_json(reply)
    except WebSocketDisconnect:
        return


async def _run_session_coalescing(
    ws: WebSocket, engine: _Engine, rate_limit: float
) -> None:
    """Latest-wins frame processing under a per-session solve budget.

    Control messages are handled immediately by the reader; frames land in a
    one-slot buffer that newer frames overwrite, and the processor drains it
    no faster than the budget allows. Dropped frames simply never get a
    solution message; sequence numbers of answered frames still increase.
    """
    core = _SessionCore(engine)
    interval = 1.0 / rate_limit
    slot: deque[dict] = deque(maxlen=1)
    wakeup = asyncio.Event()
    send_lock = asyncio.Lock()
    loop = asyncio.get_running_loop()

    async def send(payload: dict) -> None:
        async with send_lock:
            await ws.send_json(payload)

    async def processor() -> None:
        last = -float("inf")
        while True:
            await wakeup.wait()
            wait = interval - (loop.time() - last)
            if wait > 0:
                await asyncio.sleep(wait)
            if not slot:
                wakeup.clear()
                continue
            msg = slot.pop()
            if not slot:
                wakeup.clear()
            await send(core.handle_frame(msg))
            last = loop.time()

    worker = asyncio.create_task(processor())
    try:
        while True:
            msg = await _receive_message(ws)
            if isinstance(msg, str):
                await send(_error_message(msg))
                continue
            if msg.get("type") == "hand_update":
                slot.append(msg)
                wakeup.set()
            else:
                reply = core.handle_control(msg)
                if reply is not None:
                    await send(reply)
    except WebSocketDisconnect:
        return
    finally:
        worker.cancel()
