"""Recorded operator trajectories and controller replay reports.

A trajectory is a JSON-Lines file of timestamped operator frames, optionally
carrying externally supplied per-task intent. Replaying one pushes every
frame through a controller and aggregates solver-level metrics: path length
of the robot position track, objective statistics, and whether the final
frame's dominant combination matches the target's.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .controllers import (
    Solution,
    SolveRequest,
    SolverConfig,
    WorkspaceBounds,
    solve,
)
from .errors import DatasetError, DimensionMismatchError
from .features import parse_feature_payload
from .intent import estimate_intent
from .model import GraspModel

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "TrajectoryFrame",
    "Trajectory",
    "ReplayReport",
    "load_trajectory",
    "replay",
    "write_report",
]

REPORT_SCHEMA_VERSION = 1


@dataclass
class TrajectoryFrame:
    t: float
    features: np.ndarray
    intent: np.ndarray | None = None


@dataclass
class Trajectory:
    frames: list[TrajectoryFrame]
    task: str | None = None
    operator: str | None = None
    n_apertures: int | None = None

    @property
    def d(self) -> int:
        return self.frames[0].features.shape[0]


def load_trajectory(path: str | os.PathLike) -> Trajectory:
    """Read a trajectory file; timestamps must strictly increase.

    A line whose object has a ``meta`` key sets the trajectory metadata
    (task label, operator id) instead of adding a frame.
    """
    frames: list[TrajectoryFrame] = []
    task = operator = None
    expected_d: int | None = None
    expected_ap: int | None = None
    last_t: float | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", lineno) from None
            if not isinstance(obj, dict):
                raise DatasetError("each line must be a JSON object", lineno)
            if "meta" in obj:
                meta = obj["meta"]
                if not isinstance(meta, dict):
                    raise DatasetError("meta must be an object", lineno)
                task = meta.get("task", task)
                operator = meta.get("operator", operator)
                continue
            try:
                t = float(obj["t"])
            except (KeyError, TypeError, ValueError):
                raise DatasetError("frame needs a numeric timestamp 't'", lineno) from None
            if last_t is not None and t <= last_t:
                raise DatasetError(
                    f"timestamps must strictly increase ({t} after {last_t})", lineno
                )
            last_t = t
            values, n_apertures = parse_feature_payload(obj.get("features"), lineno)
            if expected_d is None:
                expected_d, expected_ap = values.shape[0], n_apertures
            elif values.shape[0] != expected_d or n_apertures != expected_ap:
                raise DatasetError(
                    f"feature layout ({values.shape[0]} dims) differs from the "
                    f"first frame ({expected_d} dims)",
                    lineno,
                )
            intent = obj.get("intent")
            if intent is not None:
                intent = np.asarray(intent, dtype=float)
                if intent.ndim != 1:
                    raise DatasetError("intent must be a flat array", lineno)
            frames.append(TrajectoryFrame(t=t, features=values, intent=intent))
    if not frames:
        raise DatasetError("no frames")
    return Trajectory(frames=frames, task=task, operator=operator, n_apertures=expected_ap)


@dataclass
class ReplayReport:
    """Per-frame solutions plus summary metrics for one controller mode."""

    mode: str
    task: str | None
    operator: str | None
    n_apertures: int | None
    times: list[float] = field(default_factory=list)
    solutions: list[Solution] = field(default_factory=list)

    @property
    def path_length(self) -> float:
        """Length of the solved track: position coordinates for structured
        layouts, the full vector for raw ones."""
        if len(self.solutions) < 2:
            return 0.0
        take = slice(0, 3) if self.n_apertures is not None else slice(None)
        pts = np.stack([s.robot[take] for s in self.solutions])
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))

    def summary(self, include_timings: bool = True) -> dict:
        objectives = np.array([s.objective for s in self.solutions])
        final = self.solutions[-1]
        mean_ms: float | None = None
        if include_timings:
            mean_ms = float(
                np.mean([s.meta.wall_time_ms for s in self.solutions])
            )
        return {
            "frames": len(self.solutions),
            "path_length": self.path_length,
            "mean_objective": float(np.mean(objectives)),
            "max_objective": float(np.max(objectives)),
            "mean_solve_ms": mean_ms,
            "final_task_match": bool(
                int(np.argmax(final.p_r)) == int(np.argmax(final.p_h))
            ),
        }

    def to_dict(self, include_timings: bool = True) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "mode": self.mode,
            "metadata": {"task": self.task, "operator": self.operator},
            "frames": [
                {
                    "t": t,
                    "solution": s.to_dict(
                        self.n_apertures, include_timings=include_timings
                    ),
                }
                for t, s in zip(self.times, self.solutions)
            ],
            "summary": self.summary(include_timings=include_timings),
        }


def replay(
    trajectory: Trajectory,
    robot_model: GraspModel,
    mode: str,
    bounds: WorkspaceBounds,
    *,
    human_model: GraspModel | None = None,
    config: SolverConfig | None = None,
) -> ReplayReport:
    """Run every trajectory frame through one controller mode.

    Frames carrying explicit intent use it verbatim; otherwise intent is
    estimated against ``human_model`` (required in that case). Frames are
    processed in order and independently.
    """
    config = config or SolverConfig()
    if trajectory.d != robot_model.d:
        raise DimensionMismatchError(
            f"trajectory frames have {trajectory.d} features, "
            f"model needs {robot_model.d}"
        )
    report = ReplayReport(
        mode=mode,
        task=trajectory.task,
        operator=trajectory.operator,
        n_apertures=trajectory.n_apertures,
    )
    for frame in trajectory.frames:
        if frame.intent is not None:
            intent = frame.intent
        elif human_model is not None:
            intent = estimate_intent(human_model, frame.features)
        else:
            raise DatasetError(
                "trajectory frames carry no intent and no human model was given"
            )
        request = SolveRequest(
            mode=mode,
            human=frame.features,
            robot_model=robot_model,
            bounds=bounds,
            intent=intent,
            human_model=human_model,
            config=config,
        )
        report.times.append(frame.t)
        report.solutions.append(solve(request))
    return report


def write_report(
    report: ReplayReport, path: str | os.PathLike, include_timings: bool = True
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(include_timings=include_timings), fh, indent=1)
        fh.write("\n")
