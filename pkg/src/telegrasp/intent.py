"""Probability machinery: powerset intent descriptors and Gaussian posteriors.

Intent over ``m`` principal tasks arrives as ``m`` independent per-task
probabilities (they need not sum to one). ``powerset_target`` expands them
into a distribution over all ``2**m`` task combinations; a grasp model's
Gaussian classes then produce the matching combination distribution for a
candidate robot configuration via a naive-Bayes posterior. All density math
runs in log space so far-from-mean queries cannot underflow to 0/0.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import logsumexp

from .errors import DimensionMismatchError, EmptyModelError, ModelFormatError
from .tasks import TaskSet

if TYPE_CHECKING:  # pragma: no cover
    from .model import GaussianClass, GraspModel

__all__ = [
    "powerset_target",
    "class_likelihood",
    "log_class_likelihood",
    "posterior",
    "log_posterior",
    "posterior_target",
    "estimate_intent",
    "GaussianEvaluator",
]


def powerset_target(intent: Sequence[float], tasks: TaskSet | None = None) -> np.ndarray:
    """Expand per-task probabilities into the task-combination distribution.

    Entry ``b`` of the result is the probability that exactly the tasks in
    bitmask ``b`` are intended: the product of ``p[i]`` over members and
    ``1 - p[j]`` over non-members. The output always sums to one even though
    the inputs are independent and unnormalized.
    """
    p = np.asarray(intent, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionMismatchError("intent must be a non-empty flat vector")
    if tasks is not None and p.size != tasks.m:
        raise DimensionMismatchError(
            f"intent has {p.size} entries but the task set has {tasks.m}"
        )
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("intent probabilities must lie in [0, 1]")
    q = np.array([1.0])
    for pi in p:
        q = np.concatenate([q * (1.0 - pi), q * pi])
    return q


def _as_class_arrays(model_class: "GaussianClass") -> tuple[np.ndarray, np.ndarray]:
    mean = np.asarray(model_class.mean, dtype=float)
    cov = np.asarray(model_class.covariance, dtype=float)
    return mean, cov


def log_class_likelihood(model_class: "GaussianClass", x: np.ndarray) -> float:
    """Log density of the class's Gaussian at configuration ``x``."""
    mean, cov = _as_class_arrays(model_class)
    x = np.asarray(x, dtype=float)
    if x.shape != mean.shape:
        raise DimensionMismatchError(
            f"query has dimension {x.shape} but the class has {mean.shape}"
        )
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ModelFormatError(
            "class covariance is not positive definite (corrupt model?)"
        ) from None
    return _log_density(x, mean, chol)


def _log_density(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> float:
    d = mean.shape[0]
    w = solve_triangular(chol, x - mean, lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (d * np.log(2.0 * np.pi) + log_det + float(w @ w))


def class_likelihood(model_class: "GaussianClass", x: np.ndarray) -> float:
    """Gaussian density of one class at ``x`` (strictly positive)."""
    return float(np.exp(log_class_likelihood(model_class, x)))


class GaussianEvaluator:
    """Precomputed Cholesky factors for repeated posterior evaluation.

    Classes with zero prior are kept in the layout but contribute -inf log
    weight, so they never receive posterior mass.
    """

    def __init__(self, model: "GraspModel") -> None:
        if not model.classes:
            raise EmptyModelError(f"model {model.embodiment!r} has no classes")
        priors = np.array([c.prior for c in model.classes], dtype=float)
        if not np.any(priors > 0.0):
            raise EmptyModelError(
                f"model {model.embodiment!r} has no class with positive prior"
            )
        self.model = model
        self.d = model.d
        self.k = len(model.classes)
        self.combinations = np.array([c.combination for c in model.classes])
        self.means = np.stack([np.asarray(c.mean, dtype=float) for c in model.classes])
        self._chols = []
        self._log_dets = np.empty(self.k)
        for i, c in enumerate(model.classes):
            cov = np.asarray(c.covariance, dtype=float)
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ModelFormatError(
                    f"class {c.combination} covariance is not positive definite"
                ) from None
            self._chols.append(chol)
            self._log_dets[i] = 2.0 * float(np.sum(np.log(np.diag(chol))))
        with np.errstate(divide="ignore"):
            self._log_priors = np.log(priors)

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise DimensionMismatchError(
                f"query has {x.shape[-1]} features but the model has {self.d}"
            )
        return x

    def log_likelihoods(self, x: np.ndarray) -> np.ndarray:
        """Per-class log densities; ``x`` may be (d,) or a batch (n, d)."""
        x = self._check_dim(x)
        batch = np.atleast_2d(x)
        out = np.empty((batch.shape[0], self.k))
        for i in range(self.k):
            w = solve_triangular(self._chols[i], (batch - self.means[i]).T, lower=True)
            quad = np.sum(w * w, axis=0)
            out[:, i] = -0.5 * (self.d * np.log(2.0 * np.pi) + self._log_dets[i] + quad)
        return out[0] if x.ndim == 1 else out

    def log_posterior(self, x: np.ndarray) -> np.ndarray:
        joint = self.log_likelihoods(x) + self._log_priors
        return joint - logsumexp(joint, axis=-1, keepdims=True)

    def posterior(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_posterior(x))

    def posterior_and_grads(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior over classes at ``x`` plus its Jacobian wrt ``x``.

        Writing the per-class score gradient g_k = -cov_k^{-1} (x - mean_k),
        the posterior (a softmax of log joint weights) differentiates to
        dP_k/dx = P_k (g_k - sum_j P_j g_j). Returns ``(P, J)`` with J of
        shape (k, d) holding dP_k/dx rows.
        """
        x = self._check_dim(x)
        if x.ndim != 1:
            raise DimensionMismatchError("gradients are computed one point at a time")
        post = self.posterior(x)
        scores = np.empty((self.k, self.d))
        for i in range(self.k):
            scores[i] = -cho_solve((self._chols[i], True), x - self.means[i])
        mean_score = post @ scores
        jac = post[:, None] * (scores - mean_score[None, :])
        return post, jac


def log_posterior(model: "GraspModel", x: np.ndarray) -> np.ndarray:
    """Log posterior over the model's classes at ``x``."""
    return GaussianEvaluator(model).log_posterior(x)


def posterior(model: "GraspModel", x: np.ndarray) -> np.ndarray:
    """Posterior probability of each model class at ``x``.

    Entries align with ``model.classes`` and sum to one over the classes
    actually present in the model (absent combinations get no entry here;
    see ``posterior_target`` for the full combination layout).
    """
    return GaussianEvaluator(model).posterior(x)


def posterior_target(model: "GraspModel", x: np.ndarray) -> np.ndarray:
    """Posterior scattered into the full ``2**m`` combination layout."""
    post = posterior(model, x)
    full = np.zeros(model.tasks.n_combinations)
    for c, value in zip(model.classes, post):
        full[c.combination] += value
    return full


def estimate_intent(model: "GraspModel", x: np.ndarray) -> np.ndarray:
    """Per-task probabilities implied by a model posterior at ``x``.

    Task ``i`` receives the total posterior mass of every class whose
    combination includes it. With a model fitted on labeled human
    demonstrations this provides a self-contained intent source; callers
    with an external classifier can skip it and pass intent directly.
    """
    post = posterior(model, x)
    p = np.zeros(model.tasks.m)
    for c, value in zip(model.classes, post):
        for i in range(model.tasks.m):
            if c.combination >> i & 1:
                p[i] += value
    return np.clip(p, 0.0, 1.0)
