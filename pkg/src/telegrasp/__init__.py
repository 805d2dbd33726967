"""Shared-control telemanipulation planning engine.

Infers multi-task grasp intent from operator hand configurations, fits
per-embodiment Gaussian grasp models, scores embodiment similarity with
closed-form divergences, and solves three controllers (mimic, intent-only,
divergence-weighted arbitration) under workspace box bounds.
"""

__all__ = [
    "TaskSet",
    "FeatureVector",
    "powerset_target",
    "class_likelihood",
    "posterior",
    "posterior_target",
    "estimate_intent",
    "GaussianClass",
    "GraspModel",
    "Demonstration",
    "FitConfig",
    "fit_em",
    "save_model",
    "load_model",
    "load_dataset",
    "ArbitrationWeights",
    "kl_feature",
    "kl_hand",
    "marginal_stats",
    "weights_between",
    "kl_table",
    "WorkspaceBounds",
    "SolverConfig",
    "SolveRequest",
    "Solution",
    "objective_intent",
    "objective_knitro",
    "gradient_knitro",
    "solve_mimic",
    "solve",
    "Trajectory",
    "ReplayReport",
    "load_trajectory",
    "replay",
]

from .controllers import (
    Solution,
    SolveRequest,
    SolverConfig,
    WorkspaceBounds,
    gradient_knitro,
    objective_intent,
    objective_knitro,
    solve,
    solve_mimic,
)
from .divergence import (
    ArbitrationWeights,
    kl_feature,
    kl_hand,
    kl_table,
    marginal_stats,
    weights_between,
)
from .features import FeatureVector
from .intent import (
    class_likelihood,
    estimate_intent,
    posterior,
    posterior_target,
    powerset_target,
)
from .model import (
    Demonstration,
    FitConfig,
    GaussianClass,
    GraspModel,
    fit_em,
    load_dataset,
    load_model,
    save_model,
)
from .tasks import TaskSet
from .trajectory import ReplayReport, Trajectory, load_trajectory, replay
