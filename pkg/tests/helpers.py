"""Shared test utilities: model builders and independent oracles.

The oracles here deliberately avoid the library's evaluation path: densities
come from scipy.stats and grid searches enumerate the box exhaustively, so
they can catch systematic errors in the package's own math.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from telegrasp import GaussianClass, GraspModel, TaskSet, WorkspaceBounds
from telegrasp.model import Demonstration


def raw_model(
    combos,
    means,
    covs,
    priors=None,
    tasks=None,
    embodiment="fixture",
) -> GraspModel:
    """Build an unstructured model directly from parameters."""
    means = [np.atleast_1d(np.asarray(m, dtype=float)) for m in means]
    covs = [np.atleast_2d(np.asarray(c, dtype=float)) for c in covs]
    if priors is None:
        priors = [1.0 / len(combos)] * len(combos)
    if tasks is None:
        n_tasks = max(int(b).bit_length() for b in combos)
        tasks = TaskSet([f"task{i}" for i in range(max(n_tasks, 1))])
    classes = [
        GaussianClass(combination=int(b), prior=float(p), mean=m, covariance=c)
        for b, p, m, c in zip(combos, priors, means, covs)
    ]
    return GraspModel(
        embodiment=embodiment,
        tasks=tasks,
        d=means[0].shape[0],
        classes=classes,
        n_apertures=None,
    )


def oracle_log_posterior(model: GraspModel, x: np.ndarray) -> np.ndarray:
    """Class posterior via scipy densities; ``x`` is (d,) or (n, d)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for c in model.classes:
        with np.errstate(divide="ignore"):
            log_prior = np.log(c.prior)
        cols.append(
            multivariate_normal.logpdf(x, mean=c.mean, cov=c.covariance) + log_prior
        )
    joint = np.stack(cols, axis=-1)
    return joint - logsumexp(joint, axis=-1, keepdims=True)


def oracle_posterior(model: GraspModel, x: np.ndarray) -> np.ndarray:
    return np.exp(oracle_log_posterior(model, x))


def oracle_objective(model, p_h, x, h=None, coef=None) -> np.ndarray:
    """Controller objective on a batch of points, scipy-density based."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    post = oracle_posterior(model, x)
    t = np.asarray(p_h, dtype=float)[model.combinations]
    f = 0.5 * np.sum((post - t) ** 2, axis=1)
    if coef is not None:
        delta = x - np.asarray(h, dtype=float)
        f = f + delta**2 @ np.asarray(coef, dtype=float)
    return f


def grid_search(
    model,
    p_h,
    bounds: WorkspaceBounds,
    step: float = 1e-3,
    h=None,
    coef=None,
    chunk: int = 200_000,
) -> tuple[np.ndarray, float]:
    """Exhaustive box search at fixed step; returns (argmin, min)."""
    axes = []
    for lo, hi in zip(bounds.lower, bounds.upper):
        n = int(round((hi - lo) / step)) + 1
        axes.append(np.linspace(lo, hi, n))
    best_f = np.inf
    best_x = None
    d = len(axes)
    if d == 1:
        grids = axes[0][:, None]
        for start in range(0, grids.shape[0], chunk):
            block = grids[start : start + chunk]
            f = oracle_objective(model, p_h, block, h=h, coef=coef)
            i = int(np.argmin(f))
            if f[i] < best_f:
                best_f, best_x = float(f[i]), block[i].copy()
        return best_x, best_f
    # Stream the cartesian product one outer slice at a time.
    outer = axes[0]
    rest = np.meshgrid(*axes[1:], indexing="ij")
    rest = np.stack([g.ravel() for g in rest], axis=1)
    for value in outer:
        block = np.concatenate(
            [np.full((rest.shape[0], 1), value), rest], axis=1
        )
        for start in range(0, block.shape[0], chunk):
            sub = block[start : start + chunk]
            f = oracle_objective(model, p_h, sub, h=h, coef=coef)
            i = int(np.argmin(f))
            if f[i] < best_f:
                best_f, best_x = float(f[i]), sub[i].copy()
    return best_x, best_f


def cluster_demos(
    rng: np.random.Generator,
    embodiment: str,
    combination: int,
    mean,
    scale,
    n: int,
    trial_prefix: str = "t",
) -> list[Demonstration]:
    mean = np.asarray(mean, dtype=float)
    draws = rng.normal(mean, scale, size=(n, mean.shape[0]))
    return [
        Demonstration(
            embodiment=embodiment,
            combination=combination,
            features=row,
            trial_id=f"{trial_prefix}{i}",
        )
        for i, row in enumerate(draws)
    ]


GRASP_TASKS = TaskSet(["use", "transfer", "handover"])

# Cluster layout shared by the structured fixture builders: combination -> mean.
STRUCTURED_MEANS = {
    1: np.array([0.40, 0.05, 0.22, 0.10, -0.20, 0.05, 0.20, 0.25, 0.30]),
    2: np.array([0.35, -0.10, 0.30, -0.15, 0.10, 0.00, 0.60, 0.55, 0.50]),
    4: np.array([0.50, 0.15, 0.28, 0.05, 0.30, -0.10, 0.40, 0.80, 0.70]),
    5: np.array([0.45, 0.02, 0.25, 0.12, 0.00, 0.02, 0.30, 0.45, 0.42]),
}


def structured_demos(
    embodiment: str,
    *,
    seed: int,
    n_per_class: int = 60,
    shift: float = 0.0,
    scale: float = 0.04,
) -> list[Demonstration]:
    """Synthetic structured demonstrations (d = 9, three apertures)."""
    rng = np.random.default_rng(seed)
    demos: list[Demonstration] = []
    for combo, mean in STRUCTURED_MEANS.items():
        demos.extend(
            cluster_demos(
                rng,
                embodiment,
                combo,
                mean + shift,
                scale,
                n_per_class,
                trial_prefix=f"{embodiment}-{combo}-",
            )
        )
    return demos


def structured_bounds() -> WorkspaceBounds:
    lower = np.array([-1.0, -1.0, 0.0, -np.pi, -np.pi, -np.pi, 0.0, 0.0, 0.0])
    upper = np.array([1.0, 1.0, 1.0, np.pi, np.pi, np.pi, 1.0, 1.0, 1.0])
    return WorkspaceBounds(lower=lower, upper=upper)
