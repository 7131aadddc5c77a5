"""Problem, configuration and solution types for the ADMM engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from src.models.arrays import IndexSet
from src.models.serialization import complex_to_pairs, matrix_to_pairs, pairs_to_complex

SolveMode = Literal["exact", "denoise"]


class SolverConfig(BaseModel):
    """ADMM knobs. Overridable from the environment, a config file or a scenario."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(default=1.0, gt=0)
    alpha: float = Field(default=1.5, ge=1.0, le=1.8)
    eps_abs: float = Field(default=1e-7, gt=0, le=1e-3)
    eps_rel: float = Field(default=1e-6, gt=0, le=1e-3)
    max_iters: int = Field(default=50_000, ge=1)
    adapt_rho: bool = True
    adapt_interval: int = Field(default=25, ge=1)
    adapt_ratio: float = Field(default=10.0, gt=1)
    adapt_factor: float = Field(default=2.0, gt=1)
    rho_min: float = Field(default=1e-6, gt=0)
    rho_max: float = Field(default=1e6, gt=0)
    divergence_threshold: float = Field(default=1e6, gt=0)
    keep_history: bool = False
    log_every: int = Field(default=1000, ge=1)
    complete_undetermined: bool = True
    completion_threshold: float = Field(default=1.0 - 1e-4, gt=0, lt=1)
    completion_oversampling: int = Field(default=16, ge=4)
    completion_rank_tol: float = Field(default=1e-6, gt=0, lt=1)
    completion_residual_tol: float = Field(default=1e-3, gt=0, lt=1)

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        return SolverConfig.model_validate({**self.model_dump(), **overrides})


@dataclass(frozen=True, slots=True)
class ProblemSpec:
    """One instance of ANM, C-ANM or C-ANM-Noisy.

    ``compression`` is the set I of the selection matrix M = P_I; the full set is
    the uncompressed program.
    """

    n: int
    omega: IndexSet
    observed: NDArray[np.complex128]
    compression: IndexSet
    mode: SolveMode = "exact"
    lam: float = 0.0

    def __post_init__(self) -> None:
        observed = np.asarray(self.observed, dtype=np.complex128).ravel()
        object.__setattr__(self, "observed", observed)
        if self.omega.ambient != self.n or self.compression.ambient != self.n:
            raise ValueError("Omega and compression must share the ambient dimension N")
        if observed.shape[0] != len(self.omega):
            raise ValueError(f"Observed length {observed.shape[0]} does not match |Omega| = {len(self.omega)}")
        if not np.all(np.isfinite(observed)):
            raise ValueError("Observed entries must be finite")
        if 0 not in self.compression:
            raise ValueError("Compression set must contain 0")
        if self.mode not in ("exact", "denoise"):
            raise ValueError(f"Unknown mode {self.mode!r}")
        if self.lam < 0:
            raise ValueError("Regularization lambda must be nonnegative")

    @classmethod
    def identity(cls, n: int, omega: IndexSet, observed: NDArray[np.complex128], **kwargs: Any) -> "ProblemSpec":
        return cls(n=n, omega=omega, observed=observed, compression=IndexSet.full(n), **kwargs)

    @property
    def is_identity(self) -> bool:
        return self.compression.is_full

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "omega": self.omega.to_dict(),
            "observed": complex_to_pairs(self.observed),
            "compression": "identity" if self.is_identity else self.compression.to_dict(),
            "mode": self.mode,
            "lambda": self.lam,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ProblemSpec":
        n = int(payload["n"])
        compression_raw = payload.get("compression", "identity")
        compression = IndexSet.full(n) if compression_raw == "identity" else IndexSet.from_dict(compression_raw)
        return cls(
            n=n,
            omega=IndexSet.from_dict(payload["omega"]),
            observed=pairs_to_complex(payload["observed"]),
            compression=compression,
            mode=payload.get("mode", "exact"),
            lam=float(payload.get("lambda", 0.0)),
        )


@dataclass(slots=True)
class SdpSolution:
    """Primal estimate and the dual pair (q, S) normalized so that Re Q <= 1."""

    x_hat: NDArray[np.complex128]
    q_hat: NDArray[np.complex128]
    s_hat: NDArray[np.complex128]
    objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    wall_time_seconds: float
    converged: bool
    mode: SolveMode = "exact"
    lam: float = 0.0
    diverged: bool = False
    rho: float = 1.0
    determined: NDArray[np.bool_] = field(default_factory=lambda: np.zeros(0, dtype=bool))
    flags: List[str] = field(default_factory=list)
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def duality_gap(self) -> float:
        return abs(self.objective - self.dual_objective)

    def to_dict(self, *, include_history: bool = False) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "mode": self.mode,
            "lambda": self.lam,
            "x_hat": complex_to_pairs(self.x_hat),
            "q_hat": complex_to_pairs(self.q_hat),
            "s_hat": matrix_to_pairs(self.s_hat),
            "objective": self.objective,
            "dual_objective": self.dual_objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "wall_time_seconds": self.wall_time_seconds,
            "converged": self.converged,
            "diverged": self.diverged,
            "rho": self.rho,
            "determined": [bool(v) for v in self.determined],
            "flags": list(self.flags),
        }
        if include_history:
            payload["history"] = list(self.history)
        return payload


@dataclass(slots=True)
class DualFeasibilityReport:
    """Residuals of the dual program constraints for a (q, S) pair."""

    stationarity: float
    min_eig_s: float
    q_off_support: float

    def within(self, tol: float) -> bool:
        return self.stationarity <= tol and self.min_eig_s >= -tol and self.q_off_support <= tol

    def to_dict(self) -> Dict[str, float]:
        return {
            "stationarity": self.stationarity,
            "min_eig_s": self.min_eig_s,
            "q_off_support": self.q_off_support,
        }
