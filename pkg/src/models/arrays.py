"""Index sets and selection operators over {0, ..., N-1}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Tuple

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True, slots=True)
class IndexSet:
    """Sorted unique subset of {0, ..., ambient-1}.

    Serves as an observation set, a compression set or an antenna array.
    """

    indices: Tuple[int, ...]
    ambient: int

    def __post_init__(self) -> None:
        if self.ambient < 1:
            raise ValueError(f"Ambient dimension must be positive, got {self.ambient}")
        previous = -1
        for value in self.indices:
            if value <= previous:
                raise ValueError("Index set entries must be strictly increasing")
            previous = value
        if self.indices and (self.indices[0] < 0 or self.indices[-1] >= self.ambient):
            raise ValueError(
                f"Index set entries must lie in [0, {self.ambient - 1}], got "
                f"[{self.indices[0]}, {self.indices[-1]}]"
            )

    @classmethod
    def from_iterable(cls, values: Iterable[int], ambient: int) -> "IndexSet":
        """Build from arbitrary integers, sorting and removing duplicates."""
        return cls(tuple(sorted({int(v) for v in values})), int(ambient))

    @classmethod
    def full(cls, ambient: int) -> "IndexSet":
        return cls(tuple(range(ambient)), ambient)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, value: object) -> bool:
        return value in set(self.indices)

    def as_array(self) -> NDArray[np.intp]:
        return np.asarray(self.indices, dtype=np.intp)

    def mask(self) -> NDArray[np.bool_]:
        flags = np.zeros(self.ambient, dtype=bool)
        flags[self.as_array()] = True
        return flags

    def complement(self) -> "IndexSet":
        members = set(self.indices)
        return IndexSet(tuple(i for i in range(self.ambient) if i not in members), self.ambient)

    def issubset(self, other: "IndexSet") -> bool:
        return set(self.indices).issubset(other.indices)

    def missing_from(self, other: "IndexSet") -> List[int]:
        """Entries of this set absent from ``other``."""
        others = set(other.indices)
        return [i for i in self.indices if i not in others]

    @property
    def is_full(self) -> bool:
        return len(self.indices) == self.ambient

    def to_dict(self) -> Dict[str, Any]:
        return {"indices": list(self.indices), "ambient": self.ambient}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "IndexSet":
        return cls(tuple(int(v) for v in payload["indices"]), int(payload["ambient"]))


@dataclass(frozen=True, slots=True)
class SelectionOperator:
    """The matrix P retaining the entries indexed by ``source``."""

    source: IndexSet

    @property
    def rows(self) -> int:
        return len(self.source)

    @property
    def cols(self) -> int:
        return self.source.ambient


@dataclass(slots=True)
class ConditionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(slots=True)
class CompressionReport:
    """Outcome of checking the exact-reconstruction hypotheses for a compression set."""

    checks: List[ConditionCheck] = field(default_factory=list)
    missing_lags: List[int] = field(default_factory=list)
    max_recoverable_sources: int = 0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[str]:
        return [f"{check.name} violated" + (f": {check.detail}" if check.detail else "") for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "missing_lags": list(self.missing_lags),
            "max_recoverable_sources": self.max_recoverable_sources,
        }
