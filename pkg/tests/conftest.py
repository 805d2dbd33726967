from __future__ import annotations

import numpy as np
import pytest

from telegrasp import TaskSet, WorkspaceBounds, fit_em
from telegrasp.model import FitConfig

from helpers import (
    GRASP_TASKS,
    raw_model,
    structured_bounds,
    structured_demos,
)


@pytest.fixture(scope="session")
def two_class_1d():
    """Two tight 1-D classes at 0 and 2 (sigma = 0.1), box [-5, 5]."""
    model = raw_model(
        combos=[1, 2],
        means=[[0.0], [2.0]],
        covs=[[[0.01]], [[0.01]]],
        tasks=TaskSet(["a", "b"]),
    )
    bounds = WorkspaceBounds(lower=[-5.0], upper=[5.0])
    return model, bounds


@pytest.fixture(scope="session")
def gentle_1d():
    """Two overlapping 1-D classes (sigma = 0.5) for interior optima."""
    model = raw_model(
        combos=[1, 2],
        means=[[0.0], [2.0]],
        covs=[[[0.25]], [[0.25]]],
        tasks=TaskSet(["a", "b"]),
    )
    bounds = WorkspaceBounds(lower=[-1.0], upper=[3.0])
    return model, bounds


@pytest.fixture(scope="session")
def fixture_2d():
    """Three 2-D classes inside a tight box."""
    model = raw_model(
        combos=[1, 2, 3],
        means=[[0.2, 0.2], [0.8, 0.3], [0.5, 0.8]],
        covs=[np.diag([0.04, 0.03]), np.diag([0.05, 0.04]), np.diag([0.03, 0.05])],
        priors=[0.3, 0.4, 0.3],
        tasks=TaskSet(["a", "b"]),
    )
    bounds = WorkspaceBounds(lower=[0.0, 0.0], upper=[1.0, 1.0])
    return model, bounds


@pytest.fixture(scope="session")
def fixture_3d():
    """Two 3-D classes inside a small box (kept tight so exhaustive
    grid search at 1e-3 stays tractable)."""
    model = raw_model(
        combos=[1, 2],
        means=[[0.05, 0.10, 0.08], [0.15, 0.05, 0.12]],
        covs=[np.eye(3) * 0.0025, np.eye(3) * 0.0030],
        tasks=TaskSet(["a", "b"]),
    )
    bounds = WorkspaceBounds(lower=[0.0, 0.0, 0.0], upper=[0.2, 0.2, 0.2])
    return model, bounds


@pytest.fixture(scope="session")
def structured_pair():
    """Fitted robot + human models over the structured 9-D layout."""
    robot = fit_em(
        structured_demos("three-finger", seed=7),
        GRASP_TASKS,
        FitConfig(store_responsibilities=False),
        n_apertures=3,
    )
    human = fit_em(
        structured_demos("human", seed=11, shift=0.03, scale=0.06),
        GRASP_TASKS,
        FitConfig(store_responsibilities=False),
        n_apertures=3,
    )
    return robot, human, structured_bounds()


@pytest.fixture(scope="session")
def nested_models():
    """Single-class models whose populations nest: narrow inside wide."""
    narrow = raw_model(
        combos=[1], means=[[0.0, 0.0]], covs=[np.eye(2) * 0.01],
        priors=[1.0], tasks=TaskSet(["a"]), embodiment="narrow",
    )
    medium = raw_model(
        combos=[1], means=[[0.0, 0.0]], covs=[np.eye(2) * 0.1],
        priors=[1.0], tasks=TaskSet(["a"]), embodiment="medium",
    )
    wide = raw_model(
        combos=[1], means=[[0.0, 0.0]], covs=[np.eye(2) * 1.0],
        priors=[1.0], tasks=TaskSet(["a"]), embodiment="wide",
    )
    return narrow, medium, wide
