"""Semantic exception hierarchy for the telegrasp engine."""


class TelegraspError(Exception):
    """Base class for all engine errors."""

    code = "error"


class DimensionMismatchError(TelegraspError, ValueError):
    """Vector or matrix sizes do not agree with the owning model."""

    code = "dimension-mismatch"


class EmptyModelError(TelegraspError, ValueError):
    """A grasp model with no usable classes was supplied."""

    code = "empty-model"


class ModelFormatError(TelegraspError, ValueError):
    """A model file is corrupt (bad symmetry, non-SPD covariance, bad fields)."""

    code = "model-format"


class SchemaVersionError(ModelFormatError):
    """A serialized document carries an unsupported schema version."""

    code = "schema-version"

    def __init__(self, expected: int, actual: object) -> None:
        super().__init__(f"unsupported schema version {actual!r}, expected {expected}")
        self.expected = expected
        self.actual = actual


class DatasetError(TelegraspError, ValueError):
    """A dataset or trajectory file failed to parse or validate."""

    code = "dataset"

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LayoutError(TelegraspError, ValueError):
    """Two feature layouts cannot be compared without an alignment map."""

    code = "layout"


class MissingCombinationError(TelegraspError, LookupError):
    """The requested task combination has no class in the model."""

    code = "missing-combination"


class InfeasibleBoundsError(TelegraspError, ValueError):
    """Workspace bounds with lower > upper (or invalid aperture range)."""

    code = "infeasible-bounds"


class WeightConfigError(TelegraspError, ValueError):
    """Arbitration weights are unusable (zero or negative after clamping)."""

    code = "weight-config"
