"""Embodiment-similarity weights from closed-form Gaussian divergences.

Two grasp models are compared population-by-population: a per-feature
divergence ``lambda_i`` from the univariate marginals and a whole-hand
divergence ``gamma`` from the joint Gaussians. Both are asymmetric. The
argument convention throughout is ``(h, r)`` where ``h`` is the operator-side
population whose variance sits in the denominator:

    lambda = ln(sigma_h / sigma_r)
             + (sigma_r**2 + (mu_r - mu_h)**2) / (2 * sigma_h**2) - 1/2

and its multivariate counterpart

    gamma = 0.5 * (tr(cov_h^-1 cov_r) + dmu^T cov_h^-1 dmu - d
                   + ln(det(cov_h) / det(cov_r))).

Both vanish exactly on identical populations and grow without bound as the
populations separate, so they are clamped before any controller divides by
them. Note the asymmetry direction: a narrow ``r`` inside a wide ``h`` scores
much lower than the reverse, which is what makes a simple gripper "cheap to
drive" from a richer hand's input but not vice versa.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import (
    DimensionMismatchError,
    LayoutError,
    MissingCombinationError,
    WeightConfigError,
)
from .model import GraspModel

__all__ = [
    "ArbitrationWeights",
    "kl_feature",
    "kl_hand",
    "marginal_stats",
    "pooled_stats",
    "feature_alignment",
    "weights_between",
    "kl_table",
    "write_kl_csv",
    "write_kl_json",
]

DEFAULT_W_MIN = 1e-3
DEFAULT_W_MAX = 1e3


@dataclass
class ArbitrationWeights:
    """Per-feature and whole-hand divergences plus their clamped versions.

    ``lam`` / ``gamma`` are the raw divergences (non-negative, possibly
    infinite for features with no counterpart); the clamped values are what
    solvers actually divide by.
    """

    lam: np.ndarray
    gamma: float
    clamped_lambda: np.ndarray
    clamped_gamma: float
    combination: int | None = None

    @classmethod
    def from_raw(
        cls,
        lam: Sequence[float],
        gamma: float,
        w_min: float = DEFAULT_W_MIN,
        w_max: float = DEFAULT_W_MAX,
        combination: int | None = None,
    ) -> "ArbitrationWeights":
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < -1e-12) or gamma < -1e-12:
            raise WeightConfigError("divergences must be non-negative")
        if not (0.0 < w_min <= w_max):
            raise WeightConfigError(f"bad clamp range [{w_min}, {w_max}]")
        return cls(
            lam=lam,
            gamma=float(gamma),
            clamped_lambda=np.clip(lam, w_min, w_max),
            clamped_gamma=float(np.clip(gamma, w_min, w_max)),
            combination=combination,
        )

    def to_dict(self) -> dict:
        return {
            "lambda": [float(v) for v in self.lam],
            "gamma": float(self.gamma),
            "clamped_lambda": [float(v) for v in self.clamped_lambda],
            "clamped_gamma": float(self.clamped_gamma),
            "combination": self.combination,
        }


def kl_feature(h: tuple[float, float], r: tuple[float, float]) -> float:
    """Divergence between two univariate normal populations ``(mu, sigma)``."""
    mu_h, sigma_h = float(h[0]), float(h[1])
    mu_r, sigma_r = float(r[0]), float(r[1])
    if sigma_h <= 0.0 or sigma_r <= 0.0:
        raise ValueError("population standard deviations must be positive")
    return (
        np.log(sigma_h / sigma_r)
        + (sigma_r**2 + (mu_r - mu_h) ** 2) / (2.0 * sigma_h**2)
        - 0.5
    )


def kl_hand(
    h: tuple[np.ndarray, np.ndarray], r: tuple[np.ndarray, np.ndarray]
) -> float:
    """Divergence between two multivariate normal populations ``(mean, cov)``."""
    mu_h = np.asarray(h[0], dtype=float)
    cov_h = np.atleast_2d(np.asarray(h[1], dtype=float))
    mu_r = np.asarray(r[0], dtype=float)
    cov_r = np.atleast_2d(np.asarray(r[1], dtype=float))
    mu_h = np.atleast_1d(mu_h)
    mu_r = np.atleast_1d(mu_r)
    d = mu_h.shape[0]
    if mu_r.shape[0] != d or cov_h.shape != (d, d) or cov_r.shape != (d, d):
        raise DimensionMismatchError("populations must share one dimension")
    try:
        chol_h = np.linalg.cholesky(cov_h)
        chol_r = np.linalg.cholesky(cov_r)
    except np.linalg.LinAlgError:
        raise ValueError("population covariances must be positive definite") from None
    trace = float(np.trace(cho_solve((chol_h, True), cov_r)))
    diff = mu_h - mu_r
    w = solve_triangular(chol_h, diff, lower=True)
    quad = float(w @ w)
    log_det_h = 2.0 * float(np.sum(np.log(np.diag(chol_h))))
    log_det_r = 2.0 * float(np.sum(np.log(np.diag(chol_r))))
    return 0.5 * (trace + quad - d + log_det_h - log_det_r)


def marginal_stats(
    model: GraspModel, combination: int, *, pooled_fallback: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the population for one task combination.

    Falls back to the prior-weighted pooled Gaussian over all classes when
    the combination is absent and ``pooled_fallback`` is set.
    """
    try:
        c = model.class_for(combination)
    except MissingCombinationError:
        if pooled_fallback:
            return pooled_stats(model)
        raise
    return c.mean.copy(), c.covariance.copy()


def pooled_stats(model: GraspModel) -> tuple[np.ndarray, np.ndarray]:
    """Moments of the prior-weighted mixture of all classes."""
    priors = model.priors
    total = float(np.sum(priors))
    if total <= 0.0:
        raise WeightConfigError(f"model {model.embodiment!r} has all-zero priors")
    weights = priors / total
    mean = np.zeros(model.d)
    for c, w in zip(model.classes, weights):
        mean += w * c.mean
    cov = np.zeros((model.d, model.d))
    for c, w in zip(model.classes, weights):
        centered = c.mean - mean
        cov += w * (c.covariance + np.outer(centered, centered))
    return mean, 0.5 * (cov + cov.T)


def feature_alignment(
    model_a: GraspModel,
    model_b: GraspModel,
    aperture_pairs: Sequence[tuple[int, int]] | None = None,
) -> list[tuple[int, int]]:
    """Pairs of comparable feature indices ``(index_in_a, index_in_b)``.

    Models of equal dimension align identically. Structured models with
    different finger counts share the pose prefix (position + orientation)
    and whatever aperture pairs the caller declares; everything else has no
    counterpart. Unequal layouts without a declared map cannot be compared.
    """
    if model_a.d == model_b.d and aperture_pairs is None:
        return [(i, i) for i in range(model_a.d)]
    if model_a.n_apertures is None or model_b.n_apertures is None:
        raise LayoutError(
            f"cannot align {model_a.embodiment!r} (d={model_a.d}) with "
            f"{model_b.embodiment!r} (d={model_b.d}) without a structured layout"
        )
    if aperture_pairs is None:
        raise LayoutError(
            f"models {model_a.embodiment!r} and {model_b.embodiment!r} have "
            "different finger counts; declare an aperture mapping"
        )
    pairs = [(i, i) for i in range(6)]
    for ap_a, ap_b in aperture_pairs:
        if not (0 <= ap_a < model_a.n_apertures and 0 <= ap_b < model_b.n_apertures):
            raise LayoutError(f"aperture pair ({ap_a}, {ap_b}) out of range")
        pairs.append((6 + ap_a, 6 + ap_b))
    return pairs


def weights_between(
    human_model: GraspModel,
    robot_model: GraspModel,
    combination: int,
    *,
    aperture_pairs: Sequence[tuple[int, int]] | None = None,
    w_min: float = DEFAULT_W_MIN,
    w_max: float = DEFAULT_W_MAX,
    per_task: bool = True,
    pooled_fallback: bool = True,
) -> ArbitrationWeights:
    """Arbitration weights driving how hard a robot must mimic the operator.

    Per-feature divergences are computed between the two models' marginals
    for ``combination`` (or their pooled Gaussians when ``per_task`` is off).
    Robot features with no human counterpart get an infinite raw divergence,
    which the clamp turns into ``w_max``: maximal freedom, minimal mimicry.
    """
    if per_task:
        mu_h, cov_h = marginal_stats(
            human_model, combination, pooled_fallback=pooled_fallback
        )
        mu_r, cov_r = marginal_stats(
            robot_model, combination, pooled_fallback=pooled_fallback
        )
    else:
        mu_h, cov_h = pooled_stats(human_model)
        mu_r, cov_r = pooled_stats(robot_model)
    pairs = feature_alignment(human_model, robot_model, aperture_pairs)

    lam = np.full(robot_model.d, np.inf)
    for hi, ri in pairs:
        lam[ri] = kl_feature(
            (mu_h[hi], float(np.sqrt(cov_h[hi, hi]))),
            (mu_r[ri], float(np.sqrt(cov_r[ri, ri]))),
        )
    idx_h = [hi for hi, _ in pairs]
    idx_r = [ri for _, ri in pairs]
    gamma = kl_hand(
        (mu_h[idx_h], cov_h[np.ix_(idx_h, idx_h)]),
        (mu_r[idx_r], cov_r[np.ix_(idx_r, idx_r)]),
    )
    return ArbitrationWeights.from_raw(
        lam, gamma, w_min=w_min, w_max=w_max, combination=combination
    )


def kl_table(
    models: Sequence[GraspModel],
    combination: int,
    *,
    alignments: dict[tuple[str, str], Sequence[tuple[int, int]]] | None = None,
    pooled_fallback: bool = False,
) -> tuple[list[str], np.ndarray]:
    """Pairwise whole-hand divergence matrix across embodiments.

    Row = the model acting on input, column = the model providing the input;
    entry (row, col) is low when the row model's population nests inside the
    column model's. The diagonal is exactly zero. Models with unequal
    layouts need an ``alignments`` entry keyed by embodiment-name pair.
    """
    if len(models) < 2:
        raise ValueError("a divergence table needs at least two models")
    ids = [m.embodiment for m in models]
    stats = [
        marginal_stats(m, combination, pooled_fallback=pooled_fallback)
        for m in models
    ]
    n = len(models)
    table = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pairs = _pair_alignment(models[i], models[j], alignments)
            idx_i = [a for a, _ in pairs]
            idx_j = [b for _, b in pairs]
            mu_i, cov_i = stats[i]
            mu_j, cov_j = stats[j]
            table[i, j] = kl_hand(
                (mu_j[idx_j], cov_j[np.ix_(idx_j, idx_j)]),
                (mu_i[idx_i], cov_i[np.ix_(idx_i, idx_i)]),
            )
    return ids, table


def _pair_alignment(
    model_a: GraspModel,
    model_b: GraspModel,
    alignments: dict[tuple[str, str], Sequence[tuple[int, int]]] | None,
) -> list[tuple[int, int]]:
    if alignments is not None:
        key = (model_a.embodiment, model_b.embodiment)
        if key in alignments:
            return feature_alignment(model_a, model_b, alignments[key])
        rev = (model_b.embodiment, model_a.embodiment)
        if rev in alignments:
            flipped = [(b, a) for a, b in alignments[rev]]
            return feature_alignment(model_a, model_b, flipped)
    return feature_alignment(model_a, model_b, None)


def write_kl_csv(path: str | os.PathLike, ids: list[str], table: np.ndarray) -> None:
    """CSV matrix with embodiment ids on both the header row and column."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(ids))
        for name, row in zip(ids, table):
            writer.writerow([name] + [repr(float(v)) for v in row])


def write_kl_json(
    path: str | os.PathLike,
    ids: list[str],
    table: np.ndarray,
    *,
    combination: int | None = None,
    task_names: Sequence[str] | None = None,
) -> None:
    doc = {
        "schema_version": 1,
        "combination": combination,
        "tasks": list(task_names) if task_names is not None else None,
        "ids": list(ids),
        "matrix": [[float(v) for v in row] for row in table],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
