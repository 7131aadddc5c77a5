"""ADMM engine for the positive atomic-norm programs (full and compressed LMI).

The LMI ``P_I T(x) P_I^H >= 0`` is split as ``G(x) = Z`` with ``Z`` PSD. The
x-update is closed form lag by lag, the Z-update is an eigenvalue clip and the
scaled multiplier ``U`` gives the dual matrix ``S = -rho U`` (normalized so the
certificate constraint ``T*(P^H S P) + K q = e0`` holds).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray

from src.logger import get_logger, log_with_context
from src.models.arrays import IndexSet
from src.models.signal import TrigPolynomial
from src.models.solver import DualFeasibilityReport, ProblemSpec, SdpSolution, SolverConfig
from src.services.core_linalg import atoms, hermitian_eig, k_diagonal, lag_weights, psd_project, toeplitz_adjoint
from src.services.source_recovery import fit_amplitudes, peaks_of_dual

logger = get_logger()


def default_lambda(sigma2: float, omega_size: int, n: int, snapshots: int) -> float:
    """sigma * sqrt(|Omega| log N / L)."""

    if sigma2 < 0 or snapshots < 1:
        raise ValueError("sigma2 must be nonnegative and the snapshot count positive")
    if n < 2:
        return 0.0
    return math.sqrt(sigma2) * math.sqrt(omega_size * math.log(n) / snapshots)


@dataclass(slots=True)
class _LagStructure:
    """Which lag of x feeds each entry of the compressed LMI matrix."""

    n: int
    lags: NDArray[np.intp]
    lower: NDArray[np.bool_]
    counts: NDArray[np.float64]

    @classmethod
    def build(cls, compression: IndexSet) -> "_LagStructure":
        idx = compression.as_array()
        lags = idx[:, None] - idx[None, :]
        lower = lags >= 0
        counts = np.bincount(lags[lower], minlength=compression.ambient).astype(float)
        return cls(compression.ambient, lags, lower, counts)

    @property
    def in_lmi(self) -> NDArray[np.bool_]:
        return self.counts > 0

    def assemble(self, x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """G(x) = P_I T(x) P_I^H."""

        values = x[np.abs(self.lags)]
        matrix = np.where(self.lags >= 0, values, values.conj())
        np.fill_diagonal(matrix, x[0].real)
        return matrix

    def lag_sums(self, matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """T*(P^H W P) for Hermitian W, read off the lower triangle."""

        lags = self.lags[self.lower]
        entries = matrix[self.lower]
        real = np.bincount(lags, weights=entries.real, minlength=self.n)
        imag = np.bincount(lags, weights=entries.imag, minlength=self.n)
        return real + 1j * imag


class AdmmSolver:
    """One solve of a ProblemSpec; owns its workspace."""

    def __init__(self, spec: ProblemSpec, config: SolverConfig) -> None:
        self.spec = spec
        self.config = config
        self.structure = _LagStructure.build(spec.compression)
        self.weights = lag_weights(spec.n)
        self.observed_mask = spec.omega.mask()
        self.y_full = np.zeros(spec.n, dtype=np.complex128)
        self.y_full[spec.omega.as_array()] = spec.observed

        in_lmi = self.structure.in_lmi
        if spec.mode == "exact":
            self.variables = in_lmi & ~self.observed_mask
            self.objective_coef = 1.0
        else:
            self.variables = in_lmi.copy()
            self.objective_coef = spec.lam
        self.determined = in_lmi | self.observed_mask
        # dual scale: S is reported per unit of the Re(x0) coefficient
        self.lam_eff = spec.lam if spec.mode == "denoise" and spec.lam > 0 else 1.0
        self.m = len(spec.compression)
        self.logger = log_with_context(
            logger, mode=spec.mode, n=spec.n, m=self.m, omega=len(spec.omega)
        )

    def _update_x(self, target: NDArray[np.complex128], rho: float) -> NDArray[np.complex128]:
        s = self.structure
        sums = s.lag_sums(target)
        means = np.zeros(s.n, dtype=np.complex128)
        in_lmi = s.in_lmi
        means[in_lmi] = sums[in_lmi] / s.counts[in_lmi]
        mean0 = float(means[0].real)
        c0 = s.counts[0]

        if self.spec.mode == "exact":
            x = self.y_full.copy()
            x[self.variables] = means[self.variables]
            if self.variables[0]:
                x[0] = mean0 - self.objective_coef / (rho * c0)
            return x

        x = self.y_full.copy()
        free = in_lmi & ~self.observed_mask
        x[free] = means[free]
        fitted = in_lmi & self.observed_mask
        weight = 2.0 * rho * s.counts[fitted]
        x[fitted] = (self.y_full[fitted] + weight * means[fitted]) / (1.0 + weight)
        lam = self.objective_coef
        if self.observed_mask[0]:
            y0 = self.y_full[0]
            real = (y0.real - lam + rho * c0 * mean0) / (1.0 + rho * c0)
            x[0] = real + 1j * y0.imag
        else:
            x[0] = mean0 - lam / (rho * c0)
        return x

    def _primal_objective(self, x: NDArray[np.complex128]) -> float:
        if self.spec.mode == "exact":
            return float(x[0].real)
        fit = x[self.spec.omega.as_array()] - self.spec.observed
        return 0.5 * float(np.vdot(fit, fit).real) + self.spec.lam * float(x[0].real)

    def _dual_pair(self, x: NDArray[np.complex128], u_scaled: NDArray[np.complex128], rho: float):
        s_hat = -rho * u_scaled / self.lam_eff
        s_hat = 0.5 * (s_hat + s_hat.conj().T)
        if self.spec.mode == "exact" or self.spec.lam <= 0:
            q_hat = np.zeros(self.spec.n, dtype=np.complex128)
            q_hat[0] = 1.0
            q_hat = q_hat - self.weights * self.structure.lag_sums(s_hat)
            q_hat[~self.observed_mask] = 0.0
        else:
            q_hat = np.zeros(self.spec.n, dtype=np.complex128)
            q_hat[self.observed_mask] = (self.y_full - x)[self.observed_mask] / self.spec.lam
        return q_hat, s_hat

    def _dual_objective(self, q_hat: NDArray[np.complex128]) -> float:
        q_omega = q_hat[self.spec.omega.as_array()]
        if self.spec.mode == "exact":
            return float(np.vdot(q_omega, self.spec.observed).real)
        lam = self.spec.lam
        return lam * float(np.vdot(q_omega, self.spec.observed).real) - 0.5 * lam**2 * float(
            np.vdot(q_omega, q_omega).real
        )

    def _weighted_norm(self, matrix: NDArray[np.complex128]) -> float:
        values = (self.weights * self.structure.lag_sums(matrix))[self.variables]
        return float(np.linalg.norm(values))

    def run(self) -> SdpSolution:
        cfg = self.config
        s = self.structure
        rho = cfg.rho
        nvar = int(np.sum(self.variables))

        z = np.zeros((self.m, self.m), dtype=np.complex128)
        u = -(self.lam_eff / self.m) * np.eye(self.m, dtype=np.complex128) / rho
        x = self.y_full.copy()

        history: List[Dict[str, float]] = []
        best = None
        best_score = math.inf
        converged = diverged = False
        primal_residual = dual_residual = math.inf
        iteration = 0

        start = time.perf_counter()
        for iteration in range(1, cfg.max_iters + 1):
            x = self._update_x(z - u, rho)
            g = s.assemble(x)
            relaxed = cfg.alpha * g + (1.0 - cfg.alpha) * z
            z_old = z
            z = psd_project(relaxed + u)
            u = u + relaxed - z
            u = 0.5 * (u + u.conj().T)

            primal_residual = float(np.linalg.norm(g - z))
            dual_residual = rho * self._weighted_norm(z - z_old)
            eps_pri = self.m * cfg.eps_abs + cfg.eps_rel * max(np.linalg.norm(g), np.linalg.norm(z))
            eps_dual = math.sqrt(nvar) * cfg.eps_abs + cfg.eps_rel * rho * self._weighted_norm(u)

            score = max(primal_residual / eps_pri, dual_residual / eps_dual if eps_dual > 0 else 0.0)
            if score < best_score:
                best_score = score
                best = (x.copy(), u.copy(), rho, primal_residual, dual_residual)

            if cfg.keep_history:
                history.append(
                    {
                        "iteration": float(iteration),
                        "primal_residual": primal_residual,
                        "dual_residual": dual_residual,
                        "rho": rho,
                        "objective": self._primal_objective(x),
                    }
                )
            if iteration % cfg.log_every == 0:
                self.logger.debug(
                    f"iter {iteration}: r={primal_residual:.3e} (eps {eps_pri:.1e}) "
                    f"s={dual_residual:.3e} (eps {eps_dual:.1e}) rho={rho:.3g}"
                )

            if primal_residual <= eps_pri and dual_residual <= eps_dual:
                converged = True
                best = (x, u, rho, primal_residual, dual_residual)
                break

            if float(np.linalg.norm(rho * u)) / self.lam_eff > cfg.divergence_threshold:
                diverged = True
                self.logger.warning(f"Dual multiplier exceeded {cfg.divergence_threshold:g} at iteration {iteration}")
                break

            if cfg.adapt_rho and iteration % cfg.adapt_interval == 0:
                if primal_residual > cfg.adapt_ratio * dual_residual and rho * cfg.adapt_factor <= cfg.rho_max:
                    rho *= cfg.adapt_factor
                    u = u / cfg.adapt_factor
                elif dual_residual > cfg.adapt_ratio * primal_residual and rho / cfg.adapt_factor >= cfg.rho_min:
                    rho /= cfg.adapt_factor
                    u = u * cfg.adapt_factor

        x, u, rho, primal_residual, dual_residual = best if best is not None else (x, u, rho, primal_residual, dual_residual)
        q_hat, s_hat = self._dual_pair(x, u, rho)

        flags: List[str] = []
        if diverged:
            flags.append("diverged: equality data may be inconsistent with the LMI")
        elif not converged:
            flags.append(f"not converged after {cfg.max_iters} iterations; best iterate returned")
        if not np.all(self.determined):
            x, unique = self._complete(x, q_hat, flags)
            converged = converged and unique
        elapsed = time.perf_counter() - start

        solution = SdpSolution(
            x_hat=x,
            q_hat=q_hat,
            s_hat=s_hat,
            objective=self._primal_objective(x),
            dual_objective=self._dual_objective(q_hat),
            primal_residual=primal_residual,
            dual_residual=dual_residual,
            iterations=iteration,
            wall_time_seconds=elapsed,
            converged=converged,
            mode=self.spec.mode,
            lam=self.spec.lam,
            diverged=diverged,
            rho=rho,
            determined=self.determined.copy(),
            flags=flags,
            history=history,
        )
        if converged:
            self.logger.info(
                f"Converged in {iteration} iterations ({elapsed:.3f}s), objective {solution.objective:.6g}, "
                f"gap {solution.duality_gap:.2e}"
            )
        else:
            self.logger.warning(f"Solve stopped without convergence after {iteration} iterations: {flags}")
        return solution

    def _complete(
        self, x: NDArray[np.complex128], q_hat: NDArray[np.complex128], flags: List[str]
    ) -> Tuple[NDArray[np.complex128], bool]:
        """Fill lags outside Omega and the LMI support from the dual roots.

        Returns the completed vector and whether the roots pin the fill down. The
        fill is unique only when the root atoms restricted to the determined lags
        have full column rank and, for exact programs, reproduce those lags.
        """

        cfg = self.config
        undetermined = np.flatnonzero(~self.determined)
        if not cfg.complete_undetermined:
            flags.append(f"lags {undetermined.tolist()} undetermined; left at zero")
            return x, True

        n = self.spec.n
        poly = TrigPolynomial(q_hat)
        taus = peaks_of_dual(poly, cfg.completion_oversampling * n, cfg.completion_threshold, polish=True)
        if taus.size == 0:
            flags.append(f"lags {undetermined.tolist()} undetermined and no dual roots found; left at zero")
            return x, not np.any(x[self.determined])

        known = IndexSet.from_iterable(np.flatnonzero(self.determined).tolist(), n)
        data = x[known.as_array()]
        amplitudes, residual = fit_amplitudes(taus, data, known, n)
        dictionary = atoms(taus, n)
        completed = x.copy()
        completed[undetermined] = dictionary[undetermined] @ amplitudes

        reasons: List[str] = []
        restricted = dictionary[known.as_array()]
        stacked = np.vstack([restricted.real, restricted.imag])
        if taus.size > stacked.shape[0]:
            reasons.append(f"{taus.size} dual roots exceed {stacked.shape[0]} real equations on the determined lags")
        else:
            singular = np.linalg.svd(stacked, compute_uv=False)
            if singular[-1] <= cfg.completion_rank_tol * singular[0]:
                ratio = singular[-1] / singular[0]
                reasons.append(f"dual-root atoms are rank deficient on the determined lags (sigma ratio {ratio:.1e})")
        scale = max(float(np.linalg.norm(data)), np.finfo(float).tiny)
        if self.spec.mode == "exact" and residual > cfg.completion_residual_tol * scale:
            reasons.append(f"dual-root atoms leave residual {residual:.2e} on the determined lags")

        if reasons:
            flags.append(f"ambiguous completion of {undetermined.size} undetermined lag(s): " + "; ".join(reasons))
            return completed, False
        flags.append(f"completed {undetermined.size} undetermined lag(s) from {taus.size} dual root(s)")
        return completed, True


def solve(spec: ProblemSpec, cfg: SolverConfig | None = None) -> SdpSolution:
    """Solve ANM (identity compression), C-ANM (exact) or C-ANM-Noisy (denoise)."""

    return AdmmSolver(spec, cfg or SolverConfig()).run()


def dual_polynomial(sol: SdpSolution) -> TrigPolynomial:
    """Q(tau) = sum_n q_n exp(-i 2 pi n tau), so Re Q(tau) = Re(a(tau)^H q)."""

    flags = tuple(sol.flags)
    if not sol.converged:
        logger.warning("Dual polynomial taken from a non-converged solution")
        flags = flags + ("dual from non-converged solution",)
    return TrigPolynomial(np.asarray(sol.q_hat, dtype=np.complex128), sign=-1, flags=flags)


def dual_residuals(
    q: NDArray[np.complex128],
    s_matrix: NDArray[np.complex128],
    compression: IndexSet,
    omega: IndexSet,
) -> DualFeasibilityReport:
    """Residuals of T*(P^H S P) + K q = e0, S >= 0 and q off Omega = 0."""

    q = np.asarray(q, dtype=np.complex128)
    n = q.shape[0]
    idx = compression.as_array()
    embedded = np.zeros((n, n), dtype=np.complex128)
    embedded[np.ix_(idx, idx)] = s_matrix
    e0 = np.zeros(n, dtype=np.complex128)
    e0[0] = 1.0
    stationarity = float(np.linalg.norm(toeplitz_adjoint(embedded) + k_diagonal(n) * q - e0))
    min_eig = float(hermitian_eig(s_matrix).values[-1])
    q_off = float(np.linalg.norm(q[~omega.mask()]))
    return DualFeasibilityReport(stationarity, min_eig, q_off)


def check_dual_feasibility(sol: SdpSolution, spec: ProblemSpec) -> DualFeasibilityReport:
    return dual_residuals(sol.q_hat, sol.s_hat, spec.compression, spec.omega)
