"""Explicit dual certificates for the compressed program and their numerical verification.

The certificate polynomial is Q(tau) = a(tau)^H q with

    q = K^{-1} (e0 - T*(sum_i p_i p_i^H)),  p_i = P_I^H u_i,  u_i in ker(A_I^H),

so that 1 - Re Q(tau) = sum_i |a(tau)^H p_i|^2 vanishes exactly at the sources.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.logger import get_logger
from src.models.arrays import IndexSet
from src.models.certificate import Certificate, CertificateReport, CertificationOutcome, ConditionResult
from src.models.signal import TrigPolynomial
from src.services.core_linalg import (
    atoms,
    circle_distance,
    eval_poly,
    lag_weights,
    nullspace_basis,
    nullspace_vector,
    uniform_grid,
)
from src.services.geometry import difference_set, validate_compression
from src.services.source_recovery import peaks_of_dual

logger = get_logger()

NONTRIVIAL_TOL = 1e-8
ROOT_TOL = 1e-9
SOS_TOL = 1e-9
DEFAULT_OVERSAMPLING = 16
EXTRA_ROOT_TOL = 1e-8
IDENTIFIABILITY_TOL = 1e-6


class HypothesisError(ValueError):
    """Raised when the exact-recovery hypotheses needed for a construction do not hold."""


def _check_inputs(taus: ArrayLike, compression: IndexSet) -> NDArray[np.float64]:
    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    if 0 not in compression:
        raise HypothesisError("compression set must contain index 0")
    if freqs.size >= len(compression):
        raise HypothesisError(f"p < M violated: p={freqs.size}, M={len(compression)}")
    if np.any((freqs < 0) | (freqs >= 1)):
        raise HypothesisError("source locations must lie in [0, 1)")
    if np.unique(freqs).size != freqs.size:
        raise HypothesisError("source locations must be distinct")
    return freqs


def _kernel_system(freqs: NDArray[np.float64], compression: IndexSet) -> NDArray[np.complex128]:
    """V = A^H P_I^H, one row per source."""
    return atoms(freqs, compression.ambient)[compression.as_array()].conj().T


def _assemble(
    u_factors: NDArray[np.complex128], freqs: NDArray[np.float64], compression: IndexSet
) -> Certificate:
    n = compression.ambient
    idx = compression.as_array()
    p_factors = np.zeros((u_factors.shape[0], n), dtype=np.complex128)
    p_factors[:, idx] = u_factors

    # T*(P^H S P) lives on the difference set of I; sum lower-triangle entries by lag
    s_small = u_factors.T @ u_factors.conj()
    lags = idx[:, None] - idx[None, :]
    lower = lags >= 0
    lag_sum = np.zeros(n, dtype=np.complex128)
    np.add.at(lag_sum, lags[lower], s_small[lower])

    support = difference_set(compression).as_array()
    e0 = np.zeros(n, dtype=np.complex128)
    e0[0] = 1.0
    q = np.zeros(n, dtype=np.complex128)
    q[support] = (lag_weights(n) * (e0 - lag_sum))[support]
    return Certificate(
        u_factors=u_factors,
        p_factors=p_factors,
        q=q,
        taus=freqs,
        compression=compression,
        grid_size=DEFAULT_OVERSAMPLING * n,
    )


def construct(taus: ArrayLike, compression: IndexSet, n: int) -> Certificate:
    """Single-square certificate from the deterministic kernel vector of V."""

    if compression.ambient != n:
        raise ValueError(f"Compression ambient {compression.ambient} does not match N={n}")
    freqs = _check_inputs(taus, compression)
    u = nullspace_vector(_kernel_system(freqs, compression))
    return _assemble(u[None, :], freqs, compression)


def construct_kernel_certificate(taus: ArrayLike, compression: IndexSet, n: int) -> Certificate:
    """Multi-square certificate averaging every orthonormal kernel direction of V."""

    if compression.ambient != n:
        raise ValueError(f"Compression ambient {compression.ambient} does not match N={n}")
    freqs = _check_inputs(taus, compression)
    basis = nullspace_basis(_kernel_system(freqs, compression))
    if basis.shape[0] == 0:
        raise HypothesisError("kernel of V is empty")
    return _assemble(basis / np.sqrt(basis.shape[0]), freqs, compression)


def _extra_roots(poly: TrigPolynomial, freqs: NDArray[np.float64], grid_size: int) -> NDArray[np.float64]:
    """Roots of 1 - Re Q away from the sources."""

    roots = peaks_of_dual(poly, grid_size, 1.0 - EXTRA_ROOT_TOL, polish=True)
    if roots.size == 0 or freqs.size == 0:
        return roots
    near = circle_distance(roots[:, None], freqs[None, :]).min(axis=1) <= 1.0 / grid_size
    return roots[~near]


def verify(cert: Certificate, taus: ArrayLike, omega: IndexSet, grid_size: int | None = None) -> CertificateReport:
    """Check the certificate conditions on a grid plus the source locations.

    Besides the four dual conditions, any further root of 1 - Re Q must leave the
    sources identifiable from the lags in Omega; otherwise another positive
    measure matches the data equally well.
    """

    n = cert.n
    grid_size = grid_size or cert.grid_size
    if grid_size < 4 * n:
        raise ValueError(f"grid_size must be at least 4N = {4 * n}, got {grid_size}")
    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    poly = TrigPolynomial(cert.q)
    report = CertificateReport(grid_size=grid_size)

    e0 = np.zeros(n, dtype=np.complex128)
    e0[0] = 1.0
    distance = float(np.linalg.norm(cert.q - e0))
    report.conditions.append(
        ConditionResult("Q is not identically one", distance > NONTRIVIAL_TOL, distance)
    )

    if freqs.size:
        root_error = float(np.max(np.abs(1.0 - eval_poly(poly, freqs).real)))
    else:
        root_error = 0.0
    report.conditions.append(ConditionResult("Re Q = 1 at every source", root_error <= ROOT_TOL, root_error))

    off_support = cert.q[~omega.mask()]
    off_norm = float(np.linalg.norm(off_support))
    report.conditions.append(
        ConditionResult(
            "q supported on Omega",
            bool(np.all(off_support == 0)),
            off_norm,
            "" if off_norm == 0 else f"nonzero at lags {np.flatnonzero(cert.q * ~omega.mask()).tolist()}",
        )
    )

    points = np.concatenate([uniform_grid(grid_size), freqs])
    gap = 1.0 - eval_poly(poly, points).real
    squares = sum(np.abs(eval_poly(TrigPolynomial(p), points)) ** 2 for p in cert.p_factors)
    sos_error = float(np.max(np.abs(gap - squares)))
    min_gap = float(np.min(gap))
    report.conditions.append(
        ConditionResult(
            "1 - Re Q is a sum of squares",
            sos_error <= SOS_TOL and min_gap >= -SOS_TOL,
            max(sos_error, max(-min_gap, 0.0)),
            f"identity error {sos_error:.2e}, min(1 - Re Q) {min_gap:.2e}",
        )
    )

    extras = _extra_roots(poly, freqs, grid_size)
    roots = np.concatenate([freqs, extras])
    if extras.size == 0:
        ratio = 1.0
    elif roots.size > 2 * len(omega):
        ratio = 0.0
    else:
        restricted = atoms(roots, n)[omega.as_array()]
        singular = np.linalg.svd(np.vstack([restricted.real, restricted.imag]), compute_uv=False)
        ratio = float(singular[-1] / singular[0])
    report.conditions.append(
        ConditionResult(
            "roots of 1 - Re Q identify the sources",
            ratio > IDENTIFIABILITY_TOL,
            ratio,
            "" if extras.size == 0 else f"extra roots at {np.round(extras, 12).tolist()}, sigma ratio {ratio:.1e}",
        )
    )

    cert.report = report
    if not report.passed:
        logger.debug(f"Certificate verification failed: {report.failures()}")
    return report


def certification_report(
    taus: ArrayLike,
    amplitudes: Sequence[float] | NDArray[np.float64],
    compression: IndexSet,
    omega: IndexSet,
    n: int,
    grid_size: int | None = None,
) -> CertificationOutcome:
    """Hypothesis checks followed by construction and verification of a certificate."""

    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    compression_report = validate_compression(compression, omega, freqs.size)
    outcome = CertificationOutcome(certified=False, compression_report=compression_report)

    if amps.shape != freqs.shape:
        outcome.reasons.append("amplitudes and locations differ in length")
        return outcome
    if np.any(amps <= 0):
        outcome.reasons.append("amplitudes must be strictly positive")
        return outcome
    if not compression_report.passed:
        outcome.reasons.extend(compression_report.failures())
        return outcome

    try:
        certificate = construct(freqs, compression, n)
    except HypothesisError as exc:
        outcome.reasons.append(str(exc))
        return outcome

    report = verify(certificate, freqs, omega, grid_size or DEFAULT_OVERSAMPLING * n)
    outcome.certificate = certificate
    outcome.certified = report.passed
    outcome.reasons.extend(report.failures())
    return outcome


def certify_recovery(
    taus: ArrayLike,
    amplitudes: Sequence[float] | NDArray[np.float64],
    compression: IndexSet,
    omega: IndexSet,
    n: int,
) -> bool:
    """True iff the hypotheses hold and a verified certificate exists."""

    return certification_report(taus, amplitudes, compression, omega, n).certified
