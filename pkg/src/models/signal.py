"""Signal-side data structures: polynomials, source models and estimates."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Tuple

import numpy as np
from numpy.typing import NDArray

EstimateMethod = Literal["peak-picking", "vandermonde", "grid"]


@dataclass(frozen=True, slots=True)
class TrigPolynomial:
    """Trigonometric polynomial sum_n c_n exp(sign * i 2 pi n tau).

    ``sign = -1`` is the dual-certificate convention, for which Re Q(tau) = Re(a(tau)^H q).
    """

    coefficients: NDArray[np.complex128]
    sign: int = -1
    flags: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError(f"Exponent sign must be +1 or -1, got {self.sign}")
        if np.asarray(self.coefficients).ndim != 1 or len(self.coefficients) < 1:
            raise ValueError("Polynomial coefficients must be a non-empty vector")

    @property
    def degree_bound(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True, slots=True)
class SourceModel:
    """Ground-truth positive sources on an aperture of ``aperture`` lags."""

    taus: NDArray[np.float64]
    powers: NDArray[np.float64]
    aperture: int

    def __post_init__(self) -> None:
        taus = np.asarray(self.taus, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if taus.shape != powers.shape or taus.ndim != 1:
            raise ValueError("taus and powers must be vectors of equal length")
        if np.any(powers <= 0):
            raise ValueError("Source powers must be strictly positive")
        if np.any((taus < 0) | (taus >= 1)):
            raise ValueError("Source locations must lie in [0, 1)")
        if len(np.unique(taus)) != len(taus):
            raise ValueError("Source locations must be distinct")
        if self.aperture < 1:
            raise ValueError("Aperture must be positive")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "powers", powers)

    @property
    def count(self) -> int:
        return len(self.taus)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers))

    def to_dict(self) -> Dict[str, Any]:
        return {"taus": self.taus.tolist(), "powers": self.powers.tolist(), "aperture": self.aperture}


@dataclass(slots=True)
class SourceEstimate:
    taus: NDArray[np.float64]
    amplitudes: NDArray[np.float64]
    method: EstimateMethod
    residual: float = 0.0
    flags: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.taus = np.asarray(self.taus, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.taus.shape != self.amplitudes.shape:
            raise ValueError("taus and amplitudes must have equal length")
        if len(self.taus) > 1 and np.any(np.diff(self.taus) <= 0):
            raise ValueError("Estimated locations must be strictly increasing")
        if np.any(self.amplitudes < 0):
            raise ValueError("Estimated amplitudes must be nonnegative")

    @property
    def count(self) -> int:
        return len(self.taus)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "taus": self.taus.tolist(),
            "amplitudes": self.amplitudes.tolist(),
            "residual": self.residual,
            "flags": list(self.flags),
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["tau", "amplitude"])
        for tau, amplitude in zip(self.taus, self.amplitudes):
            writer.writerow([f"{tau:.12g}", f"{amplitude:.12g}"])
        return buffer.getvalue()


@dataclass(slots=True)
class SourceMatch:
    truth_index: int
    estimate_index: int
    error: float


@dataclass(slots=True)
class MatchReport:
    matches: List[SourceMatch] = field(default_factory=list)
    missed: List[int] = field(default_factory=list)
    spurious: List[int] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return max((m.error for m in self.matches), default=0.0)

    @property
    def median_error(self) -> float:
        return float(np.median([m.error for m in self.matches])) if self.matches else 0.0

    def all_within(self, radius: float) -> bool:
        """True when nothing was missed and every matched error is within ``radius``."""
        return not self.missed and all(m.error <= radius for m in self.matches)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matches": [
                {"truth": m.truth_index, "estimate": m.estimate_index, "error": m.error} for m in self.matches
            ],
            "missed": list(self.missed),
            "spurious": list(self.spurious),
            "max_error": self.max_error,
        }
