"""Shared synthetic-data builders for the demo scripts."""

import numpy as np

from telegrasp import TaskSet, WorkspaceBounds
from telegrasp.model import Demonstration

TASKS = TaskSet(["use", "transfer", "handover"])

# one grasp cluster per task combination, in the 9-D structured layout
# [position(3), orientation(3), apertures(3)]
CLUSTER_MEANS = {
    0b001: np.array([0.40, 0.05, 0.22, 0.10, -0.20, 0.05, 0.20, 0.25, 0.30]),
    0b010: np.array([0.35, -0.10, 0.30, -0.15, 0.10, 0.00, 0.60, 0.55, 0.50]),
    0b100: np.array([0.50, 0.15, 0.28, 0.05, 0.30, -0.10, 0.40, 0.80, 0.70]),
    0b101: np.array([0.45, 0.02, 0.25, 0.12, 0.00, 0.02, 0.30, 0.45, 0.42]),
}


def desk_bounds() -> WorkspaceBounds:
    return WorkspaceBounds(
        lower=[-1.0, -1.0, 0.0, -np.pi, -np.pi, -np.pi, 0.0, 0.0, 0.0],
        upper=[1.0, 1.0, 1.0, np.pi, np.pi, np.pi, 1.0, 1.0, 1.0],
    )


def synthetic_demonstrations(embodiment: str, seed: int, n_per_class: int = 60,
                             shift: float = 0.0, scale: float = 0.04,
                             overrides: dict | None = None):
    """Gaussian grasp clusters around each combination's nominal pose.

    ``overrides`` replaces selected cluster means, e.g. to give a gripper
    its own way of holding a shared-task grasp.
    """
    rng = np.random.default_rng(seed)
    demos = []
    for combo, mean in CLUSTER_MEANS.items():
        if overrides and combo in overrides:
            mean = np.asarray(overrides[combo], dtype=float)
        draws = rng.normal(mean + shift, scale, size=(n_per_class, mean.size))
        demos += [
            Demonstration(embodiment=embodiment, combination=combo,
                          features=row, trial_id=f"{embodiment}-{combo}-{i}")
            for i, row in enumerate(draws)
        ]
    return demos
