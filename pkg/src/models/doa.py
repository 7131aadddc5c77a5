"""Sparse-array measurement containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from numpy.typing import NDArray

from src.models.arrays import IndexSet
from src.models.serialization import complex_to_pairs
from src.models.signal import SourceEstimate
from src.models.solver import SdpSolution


@dataclass(slots=True)
class SnapshotBatch:
    """L snapshots (rows) received on the |J| antennas."""

    snapshots: NDArray[np.complex128]
    noise_variance: float
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.snapshots.ndim != 2 or self.snapshots.shape[0] < 1:
            raise ValueError("A snapshot batch needs at least one snapshot")
        if self.noise_variance < 0:
            raise ValueError("Noise variance must be nonnegative")

    @property
    def count(self) -> int:
        return self.snapshots.shape[0]


@dataclass(slots=True)
class CoarrayObservation:
    """Lag-averaged covariance entries y_d for d in omega = difference set of J."""

    y: NDArray[np.complex128]
    omega: IndexSet
    weights: NDArray[np.int64]

    def to_dict(self) -> Dict[str, Any]:
        return {"omega": self.omega.to_dict(), "y": complex_to_pairs(self.y), "weights": self.weights.tolist()}


@dataclass(slots=True)
class DoaOutcome:
    estimate: SourceEstimate
    solution: SdpSolution
    observation: CoarrayObservation
    compression: str
    lam: float
    threshold: float
    snr_db: float | None
    guaranteed: bool
    flags: List[str] = field(default_factory=list)

    def metadata(self) -> Dict[str, Any]:
        return {
            "compression": self.compression,
            "lambda": self.lam,
            "peak_threshold": self.threshold,
            "snr_db": self.snr_db,
            "guaranteed": self.guaranteed,
            "flags": list(self.flags),
        }
