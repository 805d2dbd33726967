"""Per-embodiment grasp models fitted from labeled demonstrations.

A grasp model is a set of Gaussian classes over feature space, one class per
distinct task combination present in the training data. Fitting runs soft
expectation-maximization seeded from the demonstration labels: a sample
labeled with combination ``b`` starts with responsibility 1 for class ``b``
and may be softly reassigned afterwards. Priors are the weighted mean
responsibility mass per class.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import (
    DatasetError,
    EmptyModelError,
    MissingCombinationError,
    ModelFormatError,
    SchemaVersionError,
)
from .features import parse_feature_payload, feature_payload, unwrap_toward
from .tasks import TaskSet

__all__ = [
    "MODEL_SCHEMA_VERSION",
    "GaussianClass",
    "FitMeta",
    "GraspModel",
    "Demonstration",
    "FitConfig",
    "fit_em",
    "save_model",
    "load_model",
    "load_dataset",
    "write_dataset",
]

MODEL_SCHEMA_VERSION = 1


@dataclass
class GaussianClass:
    """One task-combination class: prior, mean and covariance."""

    combination: int
    prior: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass
class FitMeta:
    """Bookkeeping from the EM run that produced a model."""

    iterations: int = 0
    final_log_likelihood: float = float("nan")
    eps_cov: float = 0.0
    converged: bool = False
    log_likelihoods: list[float] = field(default_factory=list)
    responsibilities: list[list[float]] | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_log_likelihood": self.final_log_likelihood,
            "eps_cov": self.eps_cov,
            "converged": self.converged,
            "log_likelihoods": list(self.log_likelihoods),
            "responsibilities": self.responsibilities,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FitMeta":
        return cls(
            iterations=int(obj.get("iterations", 0)),
            final_log_likelihood=float(obj.get("final_log_likelihood", float("nan"))),
            eps_cov=float(obj.get("eps_cov", 0.0)),
            converged=bool(obj.get("converged", False)),
            log_likelihoods=[float(v) for v in obj.get("log_likelihoods", [])],
            responsibilities=obj.get("responsibilities"),
        )


@dataclass
class GraspModel:
    """Gaussian grasp classes for one embodiment over a fixed task set."""

    embodiment: str
    tasks: TaskSet
    d: int
    classes: list[GaussianClass]
    fit_meta: FitMeta = field(default_factory=FitMeta)
    n_apertures: int | None = None

    def class_for(self, combination: int) -> GaussianClass:
        for c in self.classes:
            if c.combination == combination:
                return c
        raise MissingCombinationError(
            f"model {self.embodiment!r} has no class for combination "
            f"{self.tasks.label(combination)}"
        )

    def has_combination(self, combination: int) -> bool:
        return any(c.combination == combination for c in self.classes)

    @property
    def combinations(self) -> list[int]:
        return [c.combination for c in self.classes]

    @property
    def priors(self) -> np.ndarray:
        return np.array([c.prior for c in self.classes], dtype=float)

    def validate(self, *, check_priors: bool = True, sym_tol: float = 1e-10) -> None:
        """Check structural invariants; raises ``ModelFormatError``."""
        if not self.classes:
            raise EmptyModelError(f"model {self.embodiment!r} has no classes")
        if self.n_apertures is not None and self.d != 6 + self.n_apertures:
            raise ModelFormatError(
                f"structured model dimension {self.d} != 6 + {self.n_apertures}"
            )
        seen = set()
        for c in self.classes:
            if not 0 <= c.combination < self.tasks.n_combinations:
                raise ModelFormatError(f"combination {c.combination} out of range")
            if c.combination in seen:
                raise ModelFormatError(
                    f"duplicate class for combination {c.combination}"
                )
            seen.add(c.combination)
            if c.mean.shape != (self.d,) or c.covariance.shape != (self.d, self.d):
                raise ModelFormatError(
                    f"class {c.combination} has wrong mean/covariance shape"
                )
            if not 0.0 <= c.prior <= 1.0:
                raise ModelFormatError(f"class {c.combination} prior outside [0, 1]")
            asym = float(np.max(np.abs(c.covariance - c.covariance.T)))
            if asym > sym_tol:
                raise ModelFormatError(
                    f"class {c.combination} covariance asymmetric by {asym:.3e}"
                )
            try:
                np.linalg.cholesky(c.covariance)
            except np.linalg.LinAlgError:
                raise ModelFormatError(
                    f"class {c.combination} covariance is not positive definite"
                ) from None
        if check_priors:
            total = float(np.sum(self.priors))
            if abs(total - 1.0) > 1e-10:
                raise ModelFormatError(f"class priors sum to {total!r}, not 1")


@dataclass
class Demonstration:
    """One labeled demonstration sample for fitting."""

    embodiment: str
    combination: int
    features: np.ndarray
    trial_id: str = ""
    weight: float = 1.0

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        if self.weight < 0.0:
            raise DatasetError(f"negative sample weight {self.weight}")


@dataclass
class FitConfig:
    """Knobs for the EM fit."""

    eps_cov: float = 1e-6
    tol: float = 1e-8
    max_iters: int = 200
    unwrap_orientation: bool = True
    store_responsibilities: bool = True


def _design_matrix(
    data: list[Demonstration], n_apertures: int | None, config: FitConfig
) -> np.ndarray:
    x = np.stack([s.features for s in data])
    if n_apertures is None or not config.unwrap_orientation:
        return x
    # Keep each combination's rotation vectors on the sheet of its first
    # sample so the angular seam cannot inflate orientation covariance.
    refs: dict[int, np.ndarray] = {}
    for i, s in enumerate(data):
        ref = refs.setdefault(s.combination, x[i, 3:6].copy())
        x[i, 3:6] = unwrap_toward(x[i, 3:6], ref)
    return x


def fit_em(
    data: list[Demonstration],
    tasks: TaskSet,
    config: FitConfig | None = None,
    n_apertures: int | None = None,
) -> GraspModel:
    """Fit one Gaussian class per labeled combination with soft EM.

    Responsibilities start as the one-hot demonstration labels, then
    alternate soft E/M steps until the dataset log-likelihood stabilizes
    (relative change below ``config.tol``) or ``config.max_iters`` is hit.
    Combinations with fewer than d+1 samples keep a diagonal covariance.
    ``n_apertures`` declares the structured layout; leave it None for raw
    feature vectors.
    """
    config = config or FitConfig()
    if not data:
        raise DatasetError("no demonstrations to fit")
    embodiments = {s.embodiment for s in data}
    if len(embodiments) > 1:
        raise DatasetError(f"mixed embodiments in one fit: {sorted(embodiments)}")
    d = data[0].features.shape[0]
    if n_apertures is not None and d != 6 + n_apertures:
        raise DatasetError(f"structured layout needs {6 + n_apertures} dims, got {d}")
    for i, s in enumerate(data):
        if s.features.shape != (d,):
            raise DatasetError(
                f"sample {i} has dimension {s.features.shape[0]}, expected {d}"
            )
        if not 0 <= s.combination < tasks.n_combinations:
            raise DatasetError(f"sample {i} combination out of range for task set")

    x = _design_matrix(data, n_apertures, config)
    w = np.array([s.weight for s in data], dtype=float)
    if not np.any(w > 0.0):
        raise DatasetError("all sample weights are zero")
    labels = np.array([s.combination for s in data])
    combos = sorted(set(int(b) for b in labels))
    k = len(combos)
    combo_index = {b: i for i, b in enumerate(combos)}

    label_counts = np.array([int(np.sum(labels == b)) for b in combos])
    diag_only = label_counts < d + 1

    resp = np.zeros((len(data), k))
    for i, b in enumerate(labels):
        resp[i, combo_index[int(b)]] = 1.0

    total_w = float(np.sum(w))
    eps = config.eps_cov
    means = np.zeros((k, d))
    covs = np.zeros((k, d, d))
    priors = np.zeros(k)
    lls: list[float] = []
    converged = False
    prev_ll = -np.inf

    for iteration in range(1, config.max_iters + 1):
        # M-step from the current responsibilities.
        wr = resp * w[:, None]
        mass = np.sum(wr, axis=0)
        for j in range(k):
            if mass[j] <= 0.0:
                priors[j] = 0.0
                continue
            priors[j] = mass[j] / total_w
            means[j] = wr[:, j] @ x / mass[j]
            diff = x - means[j]
            cov = (diff * wr[:, j : j + 1]).T @ diff / mass[j]
            cov = 0.5 * (cov + cov.T)
            if diag_only[j]:
                cov = np.diag(np.diag(cov))
            covs[j] = cov + eps * np.eye(d)

        # E-step: refresh responsibilities and score the new parameters.
        log_joint = np.full((len(data), k), -np.inf)
        for j in range(k):
            if priors[j] <= 0.0:
                continue
            chol = np.linalg.cholesky(covs[j])
            diff = x - means[j]
            sol = solve_triangular(chol, diff.T, lower=True)
            quad = np.sum(sol * sol, axis=0)
            log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
            log_joint[:, j] = (
                np.log(priors[j])
                - 0.5 * (d * np.log(2.0 * np.pi) + log_det + quad)
            )
        norm = logsumexp(log_joint, axis=1)
        ll = float(np.sum(w * norm))
        lls.append(ll)
        resp = np.exp(log_joint - norm[:, None])

        if np.isfinite(prev_ll):
            rel = abs(ll - prev_ll) / max(1.0, abs(prev_ll))
            if rel < config.tol:
                converged = True
                break
        prev_ll = ll

    meta = FitMeta(
        iterations=len(lls),
        final_log_likelihood=lls[-1],
        eps_cov=eps,
        converged=converged,
        log_likelihoods=lls,
        responsibilities=resp.tolist() if config.store_responsibilities else None,
    )
    classes = [
        GaussianClass(
            combination=combos[j],
            prior=float(priors[j]),
            mean=means[j].copy(),
            covariance=covs[j].copy(),
        )
        for j in range(k)
    ]
    model = GraspModel(
        embodiment=data[0].embodiment,
        tasks=tasks,
        d=d,
        classes=classes,
        fit_meta=meta,
        n_apertures=n_apertures,
    )
    model.validate()
    return model


def save_model(model: GraspModel, path: str | os.PathLike) -> None:
    """Write a model file; floats keep full binary64 precision."""
    model.validate()
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "embodiment": model.embodiment,
        "tasks": list(model.tasks.names),
        "d": model.d,
        "n_apertures": model.n_apertures,
        "classes": [
            {
                "combination": c.combination,
                "prior": c.prior,
                "mean": c.mean.tolist(),
                "covariance": c.covariance.tolist(),
            }
            for c in model.classes
        ],
        "fit_meta": model.fit_meta.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> GraspModel:
    """Read and validate a model file written by ``save_model``."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not valid JSON: {exc}") from None
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaVersionError(MODEL_SCHEMA_VERSION, version)
    try:
        tasks = TaskSet(doc["tasks"])
        classes = [
            GaussianClass(
                combination=int(c["combination"]),
                prior=float(c["prior"]),
                mean=np.asarray(c["mean"], dtype=float),
                covariance=np.asarray(c["covariance"], dtype=float),
            )
            for c in doc["classes"]
        ]
        model = GraspModel(
            embodiment=str(doc["embodiment"]),
            tasks=tasks,
            d=int(doc["d"]),
            classes=classes,
            fit_meta=FitMeta.from_dict(doc.get("fit_meta", {})),
            n_apertures=None if doc.get("n_apertures") is None else int(doc["n_apertures"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None
    model.validate()
    return model


def load_dataset(
    path: str | os.PathLike, tasks: TaskSet | None = None
) -> tuple[list[Demonstration], TaskSet, int | None]:
    """Read a JSON-Lines demonstration dataset.

    When ``tasks`` is omitted the task ordering is inferred from first
    appearance in the file (deterministic for a fixed file). Returns the
    demonstrations, the task set, and the aperture count (None for raw
    feature payloads).
    """
    rows: list[tuple[int, dict]] = []
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
            rows.append((lineno, obj))
    if not rows:
        raise DatasetError("no demonstrations")

    if tasks is None:
        seen: list[str] = []
        for lineno, obj in rows:
            for name in _combination_names(obj, lineno):
                if name not in seen:
                    seen.append(name)
        if not seen:
            raise DatasetError("cannot infer tasks: every combination is empty")
        tasks = TaskSet(seen)

    demos: list[Demonstration] = []
    expected_d: int | None = None
    expected_ap: int | None = None
    first_line = None
    for lineno, obj in rows:
        names = _combination_names(obj, lineno)
        try:
            mask = tasks.combination(names)
        except KeyError as exc:
            raise DatasetError(str(exc.args[0]), lineno) from None
        values, n_apertures = parse_feature_payload(obj.get("features"), lineno)
        if expected_d is None:
            expected_d, expected_ap, first_line = values.shape[0], n_apertures, lineno
        elif values.shape[0] != expected_d or n_apertures != expected_ap:
            raise DatasetError(
                f"feature layout ({values.shape[0]} dims) differs from line "
                f"{first_line} ({expected_d} dims)",
                lineno,
            )
        weight = obj.get("weight", 1.0)
        try:
            weight = float(weight)
        except (TypeError, ValueError):
            raise DatasetError(f"bad weight {weight!r}", lineno) from None
        if weight < 0.0:
            raise DatasetError(f"negative weight {weight}", lineno)
        demos.append(
            Demonstration(
                embodiment=str(obj.get("embodiment", "")),
                combination=mask,
                features=values,
                trial_id=str(obj.get("trial_id", "")),
                weight=weight,
            )
        )
    return demos, tasks, expected_ap


def _combination_names(obj: dict, lineno: int) -> list[str]:
    combo = obj.get("combination")
    if combo is None or not isinstance(combo, list):
        raise DatasetError("combination must be a list of task names", lineno)
    return [str(n) for n in combo]


def write_dataset(
    path: str | os.PathLike,
    demos: list[Demonstration],
    tasks: TaskSet,
    n_apertures: int | None,
) -> None:
    """Write demonstrations in the JSON-Lines dataset format."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in demos:
            doc = {
                "embodiment": s.embodiment,
                "combination": list(tasks.members(s.combination)),
                "features": feature_payload(s.features, n_apertures),
                "trial_id": s.trial_id,
                "weight": s.weight,
            }
            fh.write(json.dumps(doc) + "\n")
