"""Hand/gripper feature vectors and their wire representation.

The structured layout is ``[position(3), orientation(3), apertures(F)]``:
position in meters, orientation as a rotation vector (axis * angle, radians)
canonicalized to norm <= pi, and per-finger apertures normalized to [0, 1]
where 0 is fully open. Synthetic or benchmark data may instead use a raw
layout (a bare value vector with no positional semantics); raw payloads are
written as ``{"values": [...]}`` instead of the structured dict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, DimensionMismatchError

__all__ = [
    "FeatureVector",
    "wrap_rotation_vector",
    "unwrap_toward",
    "parse_feature_payload",
    "feature_payload",
]

_TWO_PI = 2.0 * np.pi


def wrap_rotation_vector(rotvec: np.ndarray) -> np.ndarray:
    """Equivalent rotation vector with norm <= pi."""
    r = np.asarray(rotvec, dtype=float)
    angle = float(np.linalg.norm(r))
    if angle <= np.pi or angle == 0.0:
        return r.copy()
    axis = r / angle
    wrapped = np.remainder(angle, _TWO_PI)
    if wrapped > np.pi:
        wrapped -= _TWO_PI
    return axis * wrapped


def unwrap_toward(rotvec: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Pick the rotation-vector representative closest to ``reference``.

    Candidates are ``r + 2*pi*k*axis`` for k in {-1, 0, 1}; all represent the
    same rotation. Keeping demonstrations of one grasp on the same sheet
    avoids artificial covariance inflation at the +/- pi seam.
    """
    r = np.asarray(rotvec, dtype=float)
    ref = np.asarray(reference, dtype=float)
    angle = float(np.linalg.norm(r))
    if angle == 0.0:
        return r.copy()
    axis = r / angle
    candidates = [r + _TWO_PI * k * axis for k in (-1, 0, 1)]
    return min(candidates, key=lambda c: float(np.linalg.norm(c - ref)))


@dataclass
class FeatureVector:
    """One hand or gripper configuration in the structured layout."""

    position: np.ndarray
    orientation: np.ndarray
    apertures: np.ndarray

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)
        self.apertures = np.asarray(self.apertures, dtype=float)
        if self.position.shape != (3,) or self.orientation.shape != (3,):
            raise DimensionMismatchError(
                "position and orientation must be length-3 vectors"
            )
        if self.apertures.ndim != 1:
            raise DimensionMismatchError("apertures must be a flat vector")

    @property
    def n_apertures(self) -> int:
        return self.apertures.shape[0]

    @property
    def d(self) -> int:
        return 6 + self.n_apertures

    def canonical(self) -> "FeatureVector":
        """Clamp apertures to [0, 1] and wrap the rotation vector."""
        return FeatureVector(
            position=self.position,
            orientation=wrap_rotation_vector(self.orientation),
            apertures=np.clip(self.apertures, 0.0, 1.0),
        )

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation, self.apertures])

    @classmethod
    def from_array(cls, values: np.ndarray, n_apertures: int) -> "FeatureVector":
        v = np.asarray(values, dtype=float)
        if v.shape != (6 + n_apertures,):
            raise DimensionMismatchError(
                f"expected {6 + n_apertures} features, got {v.shape}"
            )
        return cls(position=v[:3], orientation=v[3:6], apertures=v[6:])


def parse_feature_payload(obj: object, line: int | None = None) -> tuple[np.ndarray, int | None]:
    """Decode a JSON feature payload into ``(flat array, n_apertures)``.

    Structured payloads carry position/orientation/apertures and are
    canonicalized on the way in; raw payloads carry ``values`` and pass
    through untouched (``n_apertures`` is None).
    """
    if not isinstance(obj, dict):
        raise DatasetError("features must be an object", line)
    if "values" in obj:
        values = np.asarray(obj["values"], dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DatasetError("features.values must be a non-empty flat array", line)
        return values, None
    try:
        fv = FeatureVector(
            position=np.asarray(obj["position"], dtype=float),
            orientation=np.asarray(obj["orientation"], dtype=float),
            apertures=np.asarray(obj.get("apertures", []), dtype=float),
        )
    except KeyError as exc:
        raise DatasetError(f"features missing field {exc.args[0]!r}", line) from None
    except (DimensionMismatchError, ValueError) as exc:
        raise DatasetError(f"bad features: {exc}", line) from None
    fv = fv.canonical()
    return fv.to_array(), fv.n_apertures


def feature_payload(values: np.ndarray, n_apertures: int | None) -> dict:
    """Encode a flat feature array as the JSON payload form."""
    v = np.asarray(values, dtype=float)
    if n_apertures is None:
        return {"values": [float(x) for x in v]}
    return {
        "position": [float(x) for x in v[:3]],
        "orientation": [float(x) for x in v[3:6]],
        "apertures": [float(x) for x in v[6:]],
    }
