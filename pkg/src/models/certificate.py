"""Dual certificate containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from numpy.typing import NDArray

from src.models.arrays import CompressionReport, IndexSet
from src.models.serialization import complex_to_pairs


@dataclass(slots=True)
class ConditionResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(slots=True)
class CertificateReport:
    conditions: List[ConditionResult] = field(default_factory=list)
    grid_size: int = 0

    @property
    def passed(self) -> bool:
        return bool(self.conditions) and all(c.passed for c in self.conditions)

    def failures(self) -> List[str]:
        return [f"{c.name} failed (residual={c.residual:.3e})" for c in self.conditions if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "grid_size": self.grid_size,
            "conditions": [
                {"name": c.name, "passed": c.passed, "residual": c.residual, "detail": c.detail}
                for c in self.conditions
            ],
        }


@dataclass(slots=True)
class Certificate:
    """Kernel vectors u_i, their embeddings p_i = P_I^H u_i, and q.

    A single-square certificate has one row in ``u_factors``.
    """

    u_factors: NDArray[np.complex128]
    p_factors: NDArray[np.complex128]
    q: NDArray[np.complex128]
    taus: NDArray[np.float64]
    compression: IndexSet
    grid_size: int
    report: CertificateReport | None = None

    @property
    def n(self) -> int:
        return self.compression.ambient

    @property
    def u(self) -> NDArray[np.complex128]:
        return self.u_factors[0]

    @property
    def p(self) -> NDArray[np.complex128]:
        return self.p_factors[0]

    @property
    def s_matrix(self) -> NDArray[np.complex128]:
        """S = sum_i u_i u_i^H, the dual matrix paired with q."""
        return self.u_factors.T @ self.u_factors.conj()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "u": [complex_to_pairs(row) for row in self.u_factors],
            "p": [complex_to_pairs(row) for row in self.p_factors],
            "q": complex_to_pairs(self.q),
            "taus": np.asarray(self.taus).tolist(),
            "compression": self.compression.to_dict(),
            "grid_size": self.grid_size,
            "report": self.report.to_dict() if self.report else None,
        }


@dataclass(slots=True)
class CertificationOutcome:
    certified: bool
    compression_report: CompressionReport
    certificate: Certificate | None = None
    reasons: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "certified": self.certified,
            "reasons": list(self.reasons),
            "compression": self.compression_report.to_dict(),
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }
