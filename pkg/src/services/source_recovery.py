"""Source extraction: dual-polynomial peaks and Vandermonde decomposition."""

from __future__ import annotations

from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment, minimize_scalar, nnls

from src.logger import get_logger
from src.models.arrays import IndexSet
from src.models.signal import MatchReport, SourceEstimate, SourceMatch, SourceModel, TrigPolynomial
from src.services.core_linalg import atoms, circle_distance, eval_poly, hermitian_eig, toeplitz, uniform_grid

logger = get_logger()

EXACT_THRESHOLD = 1.0 - 1e-6
NOISY_THRESHOLD = 1.0 - 1e-2
EXACT_RANK_TOL = 1e-8
NEGLIGIBLE_AMPLITUDE = 1e-6
WEAK_PEAK_FRACTION = 1e-3
REDUNDANT_PEAK_SLACK = 1e-8


class NotPsdError(ValueError):
    """Raised when a Toeplitz matrix expected to be PSD has a significantly negative eigenvalue."""


def _real_part(poly: TrigPolynomial, taus: ArrayLike) -> NDArray[np.float64]:
    return eval_poly(poly, np.mod(taus, 1.0)).real


def _merge_close(taus: NDArray[np.float64], values: NDArray[np.float64], radius: float) -> NDArray[np.float64]:
    """Keep the higher of any two peaks closer than ``radius`` on the circle."""

    order = np.argsort(-values)
    kept: list[float] = []
    for idx in order:
        tau = float(taus[idx])
        if all(circle_distance(tau, other) > radius for other in kept):
            kept.append(tau)
    return np.sort(np.asarray(kept, dtype=float))


def peaks_of_dual(
    poly: TrigPolynomial,
    grid_size: int,
    threshold: float = EXACT_THRESHOLD,
    *,
    polish: bool = False,
) -> NDArray[np.float64]:
    """Local maxima of Re Q over a uniform grid, refined and thresholded.

    Each grid maximizer is refined with a three-point parabola; with ``polish``
    the refined point is further maximized within one grid cell. The threshold
    applies to the refined value.
    """

    if not 0.0 < threshold < 1.0:
        raise ValueError(f"Peak threshold must lie in (0, 1), got {threshold}")
    grid = uniform_grid(grid_size)
    values = _real_part(poly, grid)
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    candidates = np.flatnonzero((values >= left) & (values > right))
    if candidates.size == 0:
        return np.zeros(0)

    step = 1.0 / grid_size
    refined_taus = []
    refined_values = []
    for idx in candidates:
        y_left, y_mid, y_right = left[idx], values[idx], right[idx]
        curvature = y_left - 2.0 * y_mid + y_right
        offset = 0.5 * (y_left - y_right) / curvature if curvature < 0 else 0.0
        offset = float(np.clip(offset, -0.5, 0.5))
        tau = (grid[idx] + offset * step) % 1.0
        value = y_mid - 0.25 * (y_left - y_right) * offset
        if polish:
            result = minimize_scalar(
                lambda t: -float(_real_part(poly, t)[0]),
                bounds=(tau - step, tau + step),
                method="bounded",
                options={"xatol": 1e-13},
            )
            tau = float(result.x) % 1.0
            value = -float(result.fun)
        if tau >= 1.0:
            # -1e-17 % 1.0 rounds to 1.0
            tau = 0.0
        if value >= threshold:
            refined_taus.append(tau)
            refined_values.append(value)

    if not refined_taus:
        return np.zeros(0)
    return _merge_close(np.asarray(refined_taus), np.asarray(refined_values), 0.5 * step)


def fit_amplitudes(
    taus: ArrayLike, observed: ArrayLike, omega: IndexSet, n: int
) -> Tuple[NDArray[np.float64], float]:
    """Nonnegative least-squares amplitudes of atoms at ``taus`` against observed lags."""

    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    data = np.asarray(observed, dtype=np.complex128)
    if freqs.size == 0:
        return np.zeros(0), float(np.linalg.norm(data))
    dictionary = atoms(freqs, n)[omega.as_array()]
    stacked = np.vstack([dictionary.real, dictionary.imag])
    target = np.concatenate([data.real, data.imag])
    amplitudes, residual = nnls(stacked, target)
    return amplitudes, float(residual)


def prune_peaks(
    taus: ArrayLike, observed: ArrayLike, omega: IndexSet, n: int
) -> Tuple[NDArray[np.float64], NDArray[np.float64], float, int]:
    """NNLS fit that drops peaks contributing nothing, then refits the rest.

    A peak goes when its amplitude is negligible next to the largest one, or when
    it is weak and removing it leaves the fit residual unchanged. Returns the kept
    locations, their amplitudes, the residual and the number of dropped peaks.
    """

    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    amplitudes, residual = fit_amplitudes(freqs, observed, omega, n)
    if freqs.size == 0:
        return freqs, amplitudes, residual, 0

    top = float(np.max(amplitudes))
    keep = amplitudes > NEGLIGIBLE_AMPLITUDE * top
    slack = REDUNDANT_PEAK_SLACK * float(np.linalg.norm(observed))
    for idx in np.argsort(amplitudes):
        if not keep[idx] or amplitudes[idx] > WEAK_PEAK_FRACTION * top:
            continue
        trial = keep.copy()
        trial[idx] = False
        if not np.any(trial):
            break
        _, trial_residual = fit_amplitudes(freqs[trial], observed, omega, n)
        if trial_residual <= residual + slack:
            keep = trial

    if np.all(keep):
        return freqs, amplitudes, residual, 0
    kept = freqs[keep]
    amplitudes, residual = fit_amplitudes(kept, observed, omega, n)
    positive = amplitudes > 0
    return kept[positive], amplitudes[positive], residual, freqs.size - int(np.sum(positive))


def estimate_from_dual(
    poly: TrigPolynomial,
    observed: ArrayLike,
    omega: IndexSet,
    n: int,
    grid_size: int,
    threshold: float,
    *,
    polish: bool = True,
) -> SourceEstimate:
    """Peaks of the dual polynomial with NNLS amplitudes fitted on the observations."""

    peaks = peaks_of_dual(poly, grid_size, threshold, polish=polish)
    taus, amplitudes, residual, dropped = prune_peaks(peaks, observed, omega, n)
    flags = list(poly.flags)
    if dropped:
        flags.append(f"dropped {dropped} negligible-amplitude peak(s)")
    if peaks.size == 0:
        flags.append("no peaks above threshold")
    return SourceEstimate(taus, amplitudes, "peak-picking", residual, flags)


def vandermonde_decompose(x_hat: ArrayLike, rank_tol: float = EXACT_RANK_TOL) -> SourceEstimate:
    """Atomic decomposition of x_hat from the range space of T(x_hat).

    Frequencies come from the shift invariance of the leading eigenvectors
    (first rows versus last rows); amplitudes from NNLS against x_hat.
    """

    x = np.asarray(x_hat, dtype=np.complex128)
    n = x.shape[0]
    if not np.any(x):
        return SourceEstimate(np.zeros(0), np.zeros(0), "vandermonde", 0.0)

    values, vectors = hermitian_eig(toeplitz(x))
    lam_max = float(values[0])
    if lam_max <= 0.0 or float(values[-1]) < -rank_tol * lam_max:
        raise NotPsdError(
            f"T(x) has eigenvalue {values[-1]:.3e} below -rank_tol * lambda_max ({-rank_tol * max(lam_max, 0.0):.3e})"
        )

    flags: list[str] = []
    rank = int(np.sum(values > rank_tol * lam_max))
    if rank > n - 1:
        flags.append(f"numerical rank {rank} capped at N-1={n - 1}")
        rank = n - 1
    if rank == 0:
        return SourceEstimate(np.zeros(0), np.zeros(0), "vandermonde", float(np.linalg.norm(x)), flags)

    signal = vectors[:, :rank]
    shift, *_ = np.linalg.lstsq(signal[:-1], signal[1:], rcond=None)
    poles = np.linalg.eigvals(shift)
    taus = np.sort(np.mod(np.angle(poles) / (2.0 * np.pi), 1.0))
    taus[taus >= 1.0] = 0.0
    taus = np.unique(taus)

    taus, amplitudes, residual, dropped = prune_peaks(taus, x, IndexSet.full(n), n)
    if dropped:
        flags.append(f"dropped {dropped} nonpositive or negligible amplitude(s)")
    return SourceEstimate(taus, amplitudes, "vandermonde", residual, flags)


def match_sources(estimate: SourceEstimate, truth: SourceModel, radius: float | None = None) -> MatchReport:
    """Optimal assignment under the circle metric; pairs beyond ``radius`` count as missed and spurious."""

    report = MatchReport()
    if truth.count == 0 or estimate.count == 0:
        report.missed = list(range(truth.count))
        report.spurious = list(range(estimate.count))
        return report

    cost = circle_distance(truth.taus[:, None], estimate.taus[None, :])
    rows, cols = linear_sum_assignment(cost)
    matched_truth, matched_estimate = set(), set()
    for r, c in zip(rows, cols):
        error = float(cost[r, c])
        if radius is not None and error > radius:
            continue
        report.matches.append(SourceMatch(int(r), int(c), error))
        matched_truth.add(int(r))
        matched_estimate.add(int(c))
    report.missed = [i for i in range(truth.count) if i not in matched_truth]
    report.spurious = [j for j in range(estimate.count) if j not in matched_estimate]
    return report
