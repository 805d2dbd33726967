"""Principal task sets and task-combination bitmask indexing.

A combination of principal tasks is encoded as an integer bitmask over a
fixed task ordering: bit ``i`` set means task ``i`` is part of the
combination. Index 0 is the empty combination. The full combination space
for ``m`` tasks therefore has ``2**m`` entries, and the ordering must stay
fixed for the lifetime of any model built on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import DimensionMismatchError

__all__ = ["TaskSet"]


@dataclass(frozen=True)
class TaskSet:
    """An ordered, immutable set of principal task names."""

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]) -> None:
        names = tuple(names)
        if not names:
            raise ValueError("a task set needs at least one task")
        if len(set(names)) != len(names):
            raise ValueError(f"task names must be unique, got {names}")
        object.__setattr__(self, "names", names)

    @property
    def m(self) -> int:
        return len(self.names)

    @property
    def n_combinations(self) -> int:
        return 1 << self.m

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown task {name!r}, tasks are {list(self.names)}") from None

    def combination(self, members: Iterable[str]) -> int:
        """Bitmask for the combination containing exactly ``members``."""
        mask = 0
        for name in members:
            mask |= 1 << self.index(name)
        return mask

    def members(self, mask: int) -> tuple[str, ...]:
        """Task names present in combination ``mask``."""
        self._check_mask(mask)
        return tuple(n for i, n in enumerate(self.names) if mask >> i & 1)

    def label(self, mask: int) -> str:
        """Human-readable set label, e.g. ``{use, handover}`` or ``{}``."""
        return "{" + ", ".join(self.members(mask)) + "}"

    def combinations(self) -> range:
        """All combination bitmasks, empty set first."""
        return range(self.n_combinations)

    def _check_mask(self, mask: int) -> None:
        if not 0 <= mask < self.n_combinations:
            raise DimensionMismatchError(
                f"combination {mask} out of range for {self.m} tasks"
            )
