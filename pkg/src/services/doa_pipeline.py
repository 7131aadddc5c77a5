"""Sparse-array DOA: snapshot simulation, co-array averaging and gridless recovery."""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.config import Settings, get_settings
from src.logger import get_logger, log_timing, log_with_context
from src.models.arrays import IndexSet
from src.models.doa import CoarrayObservation, DoaOutcome, SnapshotBatch
from src.models.signal import SourceModel
from src.models.solver import ProblemSpec, SolverConfig
from src.services.certificate import certify_recovery
from src.services.core_linalg import atoms
from src.services.geometry import difference_set
from src.services.sdp_solver import default_lambda, dual_polynomial, solve
from src.services.source_recovery import estimate_from_dual

logger = get_logger()

CompressionChoice = Literal["coarray", "identity"]


class PipelineError(RuntimeError):
    """Raised when a pipeline stage fails; keeps the stage name and the cause."""

    def __init__(self, message: str, *, step: str, original_error: Exception | None = None) -> None:
        super().__init__(message)
        self.step = step
        self.original_error = original_error


def _steering(model: SourceModel, array: IndexSet) -> NDArray[np.complex128]:
    if model.aperture != array.ambient:
        raise ValueError(f"Source aperture {model.aperture} does not match array aperture {array.ambient}")
    return atoms(model.taus, array.ambient)[array.as_array()]


def _circular_gaussian(rng: np.random.Generator, shape: tuple[int, ...], variance: ArrayLike) -> NDArray[np.complex128]:
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_source_model(
    rng: np.random.Generator,
    count: int,
    n: int,
    *,
    min_separation: float = 0.0,
    power_range: tuple[float, float] = (1.0, 1.0),
    max_attempts: int = 10_000,
) -> SourceModel:
    """Uniform locations on [0, 1) with pairwise circle distance >= ``min_separation``."""

    if count * min_separation >= 1.0:
        raise ValueError(f"Cannot place {count} sources {min_separation} apart on the unit circle")
    for _ in range(max_attempts):
        taus = np.sort(rng.uniform(0.0, 1.0, count))
        if count < 2 or min_separation <= 0.0:
            break
        gaps = np.diff(np.concatenate([taus, taus[:1] + 1.0]))
        if np.min(gaps) >= min_separation:
            break
    else:
        raise ValueError(f"No separated configuration found in {max_attempts} draws")
    low, high = power_range
    powers = rng.uniform(low, high, count) if high > low else np.full(count, low)
    return SourceModel(taus=taus, powers=powers, aperture=n)


def simulate_snapshots(
    model: SourceModel, array: IndexSet, snapshots: int, sigma2: float, seed: int | None = None
) -> SnapshotBatch:
    """u_l = P_J sum_k c_{k,l} a(tau_k) + w_l with circular Gaussian c and w."""

    if snapshots < 1:
        raise ValueError(f"Snapshot count must be positive, got {snapshots}")
    if sigma2 < 0:
        raise ValueError("Noise variance must be nonnegative")

    rng = np.random.default_rng(seed)
    steering = _steering(model, array)
    amplitudes = _circular_gaussian(rng, (snapshots, model.count), model.powers)
    noise = _circular_gaussian(rng, (snapshots, len(array)), sigma2)
    received = amplitudes @ steering.T + noise
    return SnapshotBatch(received, float(sigma2), seed)


def empirical_covariance(batch: SnapshotBatch) -> NDArray[np.complex128]:
    """(1/L) sum_l u_l u_l^H."""

    data = batch.snapshots
    covariance = data.T @ data.conj() / batch.count
    return 0.5 * (covariance + covariance.conj().T)


def exact_covariance(model: SourceModel, array: IndexSet, sigma2: float = 0.0) -> NDArray[np.complex128]:
    """P_J T(x*) P_J^H + sigma^2 I."""

    steering = _steering(model, array)
    covariance = (steering * model.powers) @ steering.conj().T + sigma2 * np.eye(len(array))
    return 0.5 * (covariance + covariance.conj().T)


def coarray_average(sigma: ArrayLike, array: IndexSet, sigma2: float) -> CoarrayObservation:
    """Average covariance entries over all antenna pairs sharing a lag."""

    covariance = np.asarray(sigma, dtype=np.complex128)
    size = len(array)
    if covariance.shape != (size, size):
        raise ValueError(f"Covariance must be {size} x {size}, got {covariance.shape}")

    covariance = covariance - sigma2 * np.eye(size)
    positions = array.as_array()
    lags = positions[:, None] - positions[None, :]
    lower = lags >= 0
    lag_index = lags[lower]
    entries = covariance[lower]
    counts = np.bincount(lag_index, minlength=array.ambient)
    sums = np.bincount(lag_index, weights=entries.real, minlength=array.ambient) + 1j * np.bincount(
        lag_index, weights=entries.imag, minlength=array.ambient
    )

    omega = difference_set(array)
    support = omega.as_array()
    if np.any(counts[support] == 0):
        raise RuntimeError("difference-set lag without an antenna pair")
    y = sums[support] / counts[support]
    y[0] = y[0].real
    return CoarrayObservation(y=y, omega=omega, weights=counts[support].astype(np.int64))


def snr_to_sigma2(powers: ArrayLike, snr_db: float) -> float:
    """sigma^2 such that sum(powers) / sigma^2 equals the requested SNR."""
    return float(np.sum(powers)) / 10.0 ** (snr_db / 10.0)


def _snr_db(model: SourceModel, sigma2: float) -> float | None:
    if sigma2 <= 0:
        return None
    return 10.0 * math.log10(model.total_power / sigma2)


def run_doa(
    model: SourceModel,
    array: IndexSet,
    snapshots: int | None,
    sigma2: float,
    lam: float | None = None,
    solver_config: SolverConfig | None = None,
    seed: int | None = None,
    *,
    compression: CompressionChoice = "coarray",
    threshold: float | None = None,
    grid_size: int | None = None,
    settings: Settings | None = None,
) -> DoaOutcome:
    """Simulate, average, solve and pick peaks.

    ``snapshots=None`` feeds the exact covariance instead of a sample estimate
    and runs the exact program; otherwise the denoising program is solved.
    """

    settings = settings or get_settings()
    solver_config = solver_config or settings.solver
    n = array.ambient
    run_logger = log_with_context(logger, seed=seed, compression=compression, snapshots=snapshots)

    try:
        if snapshots is None:
            covariance = exact_covariance(model, array, sigma2)
        else:
            covariance = empirical_covariance(simulate_snapshots(model, array, snapshots, sigma2, seed))
    except ValueError as exc:
        raise PipelineError(f"Measurement simulation failed: {exc}", step="simulate", original_error=exc) from exc

    try:
        observation = coarray_average(covariance, array, sigma2)
    except (ValueError, RuntimeError) as exc:
        raise PipelineError(f"Co-array averaging failed: {exc}", step="coarray", original_error=exc) from exc

    if compression == "coarray":
        compression_set = array
    elif compression == "identity":
        compression_set = IndexSet.full(n)
    else:
        raise PipelineError(f"Unknown compression {compression!r}", step="configure")

    if snapshots is None:
        mode, lam_used = "exact", 0.0
        peak_threshold = threshold or settings.exact_peak_threshold
    else:
        mode = "denoise"
        lam_used = lam if lam is not None else default_lambda(sigma2, len(observation.omega), n, snapshots)
        peak_threshold = threshold or settings.noisy_peak_threshold

    try:
        problem = ProblemSpec(
            n=n,
            omega=observation.omega,
            observed=observation.y,
            compression=compression_set,
            mode=mode,
            lam=lam_used,
        )
        with log_timing(run_logger, "solve", mode=mode, m=len(compression_set)):
            solution = solve(problem, solver_config)
        estimate = estimate_from_dual(
            dual_polynomial(solution),
            observation.y,
            observation.omega,
            n,
            grid_size or settings.grid_size(n),
            peak_threshold,
        )
    except ValueError as exc:
        raise PipelineError(f"Recovery failed: {exc}", step="recover", original_error=exc) from exc

    guaranteed = certify_recovery(model.taus, model.powers, array, observation.omega, n)
    flags = list(solution.flags)
    if not guaranteed:
        flags.append("no exact-recovery guarantee for this geometry and source count")
    if estimate.count != model.count:
        run_logger.info(f"Estimated {estimate.count} source(s), model has {model.count}")

    return DoaOutcome(
        estimate=estimate,
        solution=solution,
        observation=observation,
        compression=compression,
        lam=lam_used,
        threshold=peak_threshold,
        snr_db=_snr_db(model, sigma2),
        guaranteed=guaranteed,
        flags=flags,
    )
