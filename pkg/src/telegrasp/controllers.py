"""The three grasp controllers: mimic, intent-only, and arbitration.

Mimic forces the robot configuration to the operator's (clamped into the
workspace box). Intent-only ignores the operator's pose and picks the
configuration whose class posterior best matches the target combination
distribution (half squared error). The arbitration mode ("knitro") adds an
elastic pull toward the operator configuration, weighted by the inverse of
the embodiment divergences: near-identical populations make the pull stiff,
strongly divergent ones leave the robot free to use its own grasp knowledge.

All modes respect per-feature box bounds. The smooth modes run a projected
quasi-Newton solver (L-BFGS-B) with analytic gradients from several starts:
the clamped operator pose plus every class mean, since the posterior-matching
landscape is multimodal with basins near the class means.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .divergence import ArbitrationWeights, weights_between
from .errors import (
    DimensionMismatchError,
    InfeasibleBoundsError,
    WeightConfigError,
)
from .features import FeatureVector, feature_payload
from .intent import GaussianEvaluator, powerset_target
from .model import GraspModel

__all__ = [
    "MODES",
    "WorkspaceBounds",
    "SolverConfig",
    "SolveRequest",
    "SolveMeta",
    "Solution",
    "class_targets",
    "objective_intent",
    "gradient_intent",
    "objective_knitro",
    "gradient_knitro",
    "solve_mimic",
    "solve",
]

MODES = ("mimic", "intent_only", "knitro")


@dataclass
class WorkspaceBounds:
    """Per-feature box bounds protecting the robot and its surroundings."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def validate(self, d: int | None = None, n_apertures: int | None = None) -> None:
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise InfeasibleBoundsError("lower and upper must be equal-length vectors")
        if d is not None and self.d != d:
            raise DimensionMismatchError(
                f"bounds have {self.d} entries but the model has {d}"
            )
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise InfeasibleBoundsError(
                f"lower bound exceeds upper bound at feature {bad}"
            )
        if n_apertures is not None and n_apertures > 0:
            ap_lo = self.lower[6 : 6 + n_apertures]
            ap_hi = self.upper[6 : 6 + n_apertures]
            if np.any(ap_lo < 0.0) or np.any(ap_hi > 1.0):
                raise InfeasibleBoundsError("aperture bounds must stay within [0, 1]")

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def to_dict(self) -> dict:
        return {
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
        }


@dataclass
class SolverConfig:
    """Optimizer and weight-sourcing knobs."""

    gtol: float = 1e-8
    max_iters: int = 500
    w_min: float = 1e-3
    w_max: float = 1e3
    extra_starts: int = 0
    seed: int | None = None
    tie_break_tol: float = 1e-10
    per_task_weights: bool = True
    pooled_fallback: bool = True


@dataclass
class SolveRequest:
    """One controller invocation: operator frame, intent, model, bounds."""

    mode: str
    human: np.ndarray | FeatureVector
    robot_model: GraspModel
    bounds: WorkspaceBounds
    intent: Sequence[float] | None = None
    target: Sequence[float] | None = None
    weights_override: ArbitrationWeights | None = None
    human_model: GraspModel | None = None
    aperture_pairs: Sequence[tuple[int, int]] | None = None
    config: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class SolveMeta:
    """Diagnostics attached to a solution."""

    mode: str
    iterations: int = 0
    starts: int = 0
    converged: bool = True
    wall_time_ms: float | None = None
    warnings: list[str] = field(default_factory=list)
    dropped_target_constant: float = 0.0

    def to_dict(self, include_timings: bool = True) -> dict:
        return {
            "mode": self.mode,
            "iterations": self.iterations,
            "starts": self.starts,
            "converged": self.converged,
            "wall_time_ms": self.wall_time_ms if include_timings else None,
            "warnings": list(self.warnings),
            "dropped_target_constant": self.dropped_target_constant,
        }


@dataclass
class Solution:
    """A solved robot configuration and its objective decomposition."""

    robot: np.ndarray
    objective: float
    intent_term: float
    mimic_term: float
    p_r: np.ndarray
    p_h: np.ndarray
    weights: ArbitrationWeights | None
    meta: SolveMeta

    def to_dict(
        self, n_apertures: int | None = None, include_timings: bool = True
    ) -> dict:
        return {
            "robot": feature_payload(self.robot, n_apertures),
            "objective": float(self.objective),
            "intent_term": float(self.intent_term),
            "mimic_term": float(self.mimic_term),
            "p_r": [float(v) for v in self.p_r],
            "p_h": [float(v) for v in self.p_h],
            "weights": self.weights.to_dict() if self.weights is not None else None,
            "solver_meta": self.meta.to_dict(include_timings=include_timings),
        }


def class_targets(model: GraspModel, p_h: np.ndarray) -> tuple[np.ndarray, float]:
    """Target posterior per model class, plus the dropped constant.

    Combination-distribution entries without a matching model class cannot
    influence any minimizer (their squared error is constant), so they are
    excluded from the optimized sum; the constant half-sum-of-squares they
    would have contributed is returned for reporting.
    """
    p_h = np.asarray(p_h, dtype=float)
    if p_h.shape != (model.tasks.n_combinations,):
        raise DimensionMismatchError(
            f"target has {p_h.shape} entries, expected {model.tasks.n_combinations}"
        )
    covered = model.combinations
    t = p_h[covered]
    mask = np.ones(p_h.shape[0], dtype=bool)
    mask[covered] = False
    dropped = 0.5 * float(np.sum(p_h[mask] ** 2))
    return t, dropped


class _Objective:
    """Posterior-matching objective with an optional elastic pull term."""

    def __init__(
        self,
        model: GraspModel,
        p_h: np.ndarray,
        h: np.ndarray | None = None,
        weights: ArbitrationWeights | None = None,
    ) -> None:
        self.evaluator = GaussianEvaluator(model)
        self.targets, self.dropped = class_targets(model, p_h)
        self.h = None if h is None else np.asarray(h, dtype=float)
        if weights is not None:
            if weights.clamped_gamma <= 0.0 or np.any(weights.clamped_lambda <= 0.0):
                raise WeightConfigError("clamped weights must be strictly positive")
            self.penalty_coef = 1.0 / (weights.clamped_gamma * weights.clamped_lambda)
        else:
            self.penalty_coef = None

    def intent_value(self, r: np.ndarray) -> float:
        post = self.evaluator.posterior(r)
        diff = post - self.targets
        return 0.5 * float(diff @ diff)

    def mimic_value(self, r: np.ndarray) -> float:
        if self.penalty_coef is None:
            return 0.0
        delta = np.asarray(r, dtype=float) - self.h
        return float(self.penalty_coef @ (delta * delta))

    def value(self, r: np.ndarray) -> float:
        return self.intent_value(r) + self.mimic_value(r)

    def value_and_grad(self, r: np.ndarray) -> tuple[float, np.ndarray]:
        post, jac = self.evaluator.posterior_and_grads(r)
        diff = post - self.targets
        f = 0.5 * float(diff @ diff)
        g = diff @ jac
        if self.penalty_coef is not None:
            delta = r - self.h
            f += float(self.penalty_coef @ (delta * delta))
            g = g + 2.0 * self.penalty_coef * delta
        return f, g


def objective_intent(model: GraspModel, p_h: np.ndarray, r: np.ndarray) -> float:
    """Half squared error between the class posterior at ``r`` and the target."""
    return _Objective(model, p_h).intent_value(r)


def gradient_intent(model: GraspModel, p_h: np.ndarray, r: np.ndarray) -> np.ndarray:
    return _Objective(model, p_h).value_and_grad(np.asarray(r, dtype=float))[1]


def objective_knitro(
    model: GraspModel,
    p_h: np.ndarray,
    r: np.ndarray,
    h: np.ndarray,
    weights: ArbitrationWeights,
) -> float:
    """Intent term plus the divergence-weighted elastic pull toward ``h``."""
    return _Objective(model, p_h, h, weights).value(r)


def gradient_knitro(
    model: GraspModel,
    p_h: np.ndarray,
    r: np.ndarray,
    h: np.ndarray,
    weights: ArbitrationWeights,
) -> np.ndarray:
    return _Objective(model, p_h, h, weights).value_and_grad(
        np.asarray(r, dtype=float)
    )[1]


def _resolve_target(req: SolveRequest) -> np.ndarray:
    model = req.robot_model
    if req.target is not None:
        p_h = np.asarray(req.target, dtype=float)
        if p_h.shape != (model.tasks.n_combinations,):
            raise DimensionMismatchError(
                f"target must have {model.tasks.n_combinations} entries"
            )
        if np.any(p_h < 0.0) or np.any(p_h > 1.0):
            raise ValueError("target entries must lie in [0, 1]")
        return p_h
    if req.intent is None:
        raise ValueError("request needs either intent or a precomputed target")
    return powerset_target(req.intent, model.tasks)


def _human_array(req: SolveRequest) -> np.ndarray:
    h = req.human
    if isinstance(h, FeatureVector):
        h = h.canonical().to_array()
    h = np.asarray(h, dtype=float)
    if h.shape != (req.robot_model.d,):
        raise DimensionMismatchError(
            f"human frame has {h.shape} features, model needs {req.robot_model.d}"
        )
    return h


def _finish(
    req: SolveRequest,
    robot: np.ndarray,
    objective: _Objective,
    weights: ArbitrationWeights | None,
    meta: SolveMeta,
    p_h: np.ndarray,
    t0: float,
) -> Solution:
    model = req.robot_model
    intent_term = objective.intent_value(robot)
    mimic_term = objective.mimic_value(robot)
    post = objective.evaluator.posterior(robot)
    p_r = np.zeros(model.tasks.n_combinations)
    for comb, value in zip(objective.evaluator.combinations, post):
        p_r[int(comb)] += value
    meta.dropped_target_constant = objective.dropped
    meta.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return Solution(
        robot=robot,
        objective=intent_term + mimic_term,
        intent_term=intent_term,
        mimic_term=mimic_term,
        p_r=p_r,
        p_h=p_h,
        weights=weights,
        meta=meta,
    )


def solve_mimic(req: SolveRequest) -> Solution:
    """Clamp the operator configuration into the workspace box."""
    t0 = time.perf_counter()
    model = req.robot_model
    req.bounds.validate(model.d, model.n_apertures)
    h = _human_array(req)
    p_h = _resolve_target(req)
    robot = req.bounds.clip(h)
    objective = _Objective(model, p_h)
    meta = SolveMeta(mode="mimic", converged=True)
    return _finish(req, robot, objective, None, meta, p_h, t0)


def _starts(
    req: SolveRequest, h: np.ndarray
) -> list[np.ndarray]:
    bounds = req.bounds
    starts = [bounds.clip(h)]
    for c in req.robot_model.classes:
        starts.append(bounds.clip(c.mean))
    cfg = req.config
    if cfg.extra_starts > 0:
        rng = np.random.default_rng(cfg.seed)
        span = bounds.upper - bounds.lower
        for _ in range(cfg.extra_starts):
            starts.append(bounds.lower + rng.random(bounds.d) * span)
    unique: list[np.ndarray] = []
    for s in starts:
        if not any(np.array_equal(s, u) for u in unique):
            unique.append(s)
    return unique


def solve(req: SolveRequest) -> Solution:
    """Dispatch a request to its controller and return the best solution.

    The smooth modes are multi-start: the raw start points participate as
    candidates too, so the returned objective never exceeds the objective at
    any start. Ties within ``config.tie_break_tol`` go to the candidate
    closest to the operator configuration.
    """
    if req.mode not in MODES:
        raise ValueError(f"unknown mode {req.mode!r}, expected one of {MODES}")
    if req.mode == "mimic":
        return solve_mimic(req)

    t0 = time.perf_counter()
    model = req.robot_model
    req.bounds.validate(model.d, model.n_apertures)
    h = _human_array(req)
    p_h = _resolve_target(req)
    cfg = req.config
    warnings: list[str] = []

    degenerate = bool(np.all(p_h[1:] == 0.0))
    if degenerate:
        warnings.append("degenerate-intent")

    weights: ArbitrationWeights | None = None
    if req.mode == "knitro":
        if req.weights_override is not None:
            weights = req.weights_override
        else:
            if req.human_model is None:
                raise WeightConfigError(
                    "knitro mode needs weights_override or a human model"
                )
            weights = weights_between(
                req.human_model,
                model,
                int(np.argmax(p_h)),
                aperture_pairs=req.aperture_pairs,
                w_min=cfg.w_min,
                w_max=cfg.w_max,
                per_task=cfg.per_task_weights,
                pooled_fallback=cfg.pooled_fallback,
            )

    if degenerate and req.mode == "intent_only":
        # A target concentrated on "no task" carries no usable preference;
        # fall back to following the operator.
        robot = req.bounds.clip(h)
        objective = _Objective(model, p_h)
        meta = SolveMeta(mode=req.mode, converged=True, warnings=warnings)
        return _finish(req, robot, objective, None, meta, p_h, t0)

    objective = _Objective(
        model, p_h, h if req.mode == "knitro" else None,
        weights if req.mode == "knitro" else None,
    )
    box = list(zip(req.bounds.lower, req.bounds.upper))
    candidates: list[tuple[float, np.ndarray, int, bool]] = []
    starts = _starts(req, h)
    for start in starts:
        f0 = objective.value(start)
        candidates.append((f0, start, 0, False))
        res = minimize(
            objective.value_and_grad,
            start,
            jac=True,
            method="L-BFGS-B",
            bounds=box,
            options={
                "maxiter": cfg.max_iters,
                "gtol": cfg.gtol,
                "ftol": 1e-18,
                "maxls": 40,
            },
        )
        x = req.bounds.clip(res.x)
        candidates.append((float(res.fun), x, int(res.nit), bool(res.success)))

    best_f = min(f for f, *_ in candidates)
    tied = [c for c in candidates if c[0] <= best_f + cfg.tie_break_tol]
    best = min(tied, key=lambda c: float(np.linalg.norm(c[1] - h)))
    _, robot, nit, success = best

    meta = SolveMeta(
        mode=req.mode,
        iterations=nit,
        starts=len(starts),
        converged=success,
        warnings=warnings,
    )
    return _finish(req, robot, objective, weights, meta, p_h, t0)
