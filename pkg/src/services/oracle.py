"""Brute-force grid oracle and three-way cross-validation of the gridless solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import nnls

from src.logger import get_logger
from src.models.arrays import ConditionCheck, IndexSet
from src.models.solver import ProblemSpec, SolverConfig
from src.services.certificate import certification_report
from src.services.core_linalg import atoms, circle_distance, uniform_grid
from src.services.sdp_solver import dual_polynomial, solve
from src.services.source_recovery import EXACT_THRESHOLD, estimate_from_dual

logger = get_logger()

OBJECTIVE_TOL = 1e-3
SUPPORT_MASS_FRACTION = 1e-3


@dataclass(frozen=True, slots=True)
class GridProblem:
    grid: NDArray[np.float64]
    dictionary: NDArray[np.complex128]
    target: NDArray[np.complex128]
    omega: IndexSet

    @property
    def n(self) -> int:
        return self.omega.ambient

    @property
    def size(self) -> int:
        return self.grid.size


@dataclass(slots=True)
class GridRecovery:
    coefficients: NDArray[np.float64]
    support: NDArray[np.intp]
    residual: float
    feasible: bool

    @property
    def objective(self) -> float:
        return float(np.sum(self.coefficients))

    def support_taus(self, grid: NDArray[np.float64]) -> NDArray[np.float64]:
        return grid[self.support]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "support": self.support.tolist(),
            "amplitudes": self.coefficients[self.support].tolist(),
            "objective": self.objective,
            "residual": self.residual,
            "feasible": self.feasible,
        }


@dataclass(slots=True)
class CrossValidationReport:
    objectives: Dict[str, float] = field(default_factory=dict)
    supports: Dict[str, List[float]] = field(default_factory=dict)
    checks: List[ConditionCheck] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    certified: bool = False
    grid_size: int = 0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[str]:
        return [f"{c.name}: {c.detail}" for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "certified": self.certified,
            "grid_size": self.grid_size,
            "objectives": dict(self.objectives),
            "supports": {k: list(v) for k, v in self.supports.items()},
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "notes": list(self.notes),
        }


def build_grid_problem(observed: ArrayLike, omega: IndexSet, n: int, grid_size: int) -> GridProblem:
    """Dictionary of atoms on a uniform grid restricted to the observed lags."""

    if omega.ambient != n:
        raise ValueError(f"Omega ambient {omega.ambient} does not match N={n}")
    if grid_size < 4 * n:
        raise ValueError(f"Grid size must be at least 4N = {4 * n}, got {grid_size}")
    target = np.asarray(observed, dtype=np.complex128)
    if target.shape != (len(omega),):
        raise ValueError(f"Observed length {target.shape} does not match |Omega| = {len(omega)}")
    grid = uniform_grid(grid_size)
    return GridProblem(grid=grid, dictionary=atoms(grid, n)[omega.as_array()], target=target, omega=omega)


def grid_recover(problem: GridProblem, tol: float = 1e-6) -> GridRecovery:
    """Lawson-Hanson NNLS over the grid dictionary, split into real and imaginary rows."""

    stacked = np.vstack([problem.dictionary.real, problem.dictionary.imag])
    target = np.concatenate([problem.target.real, problem.target.imag])
    if not np.any(target):
        zeros = np.zeros(problem.size)
        return GridRecovery(zeros, np.zeros(0, dtype=np.intp), 0.0, True)

    coefficients, residual = nnls(stacked, target, maxiter=50 * problem.size)
    total = float(np.sum(coefficients))
    support = np.flatnonzero(coefficients > SUPPORT_MASS_FRACTION * total)
    feasible = residual <= tol * max(1.0, float(np.linalg.norm(target)))
    if not feasible:
        logger.debug(f"Grid of {problem.size} points cannot match the data: residual {residual:.3e}")
    return GridRecovery(coefficients, support, float(residual), bool(feasible))


def _within_cell(a: NDArray[np.float64], b: NDArray[np.float64], cell: float) -> bool:
    """Every point of ``a`` lies within one grid cell of some point of ``b``."""

    if a.size == 0:
        return True
    if b.size == 0:
        return False
    gaps = circle_distance(a[:, None], b[None, :]).min(axis=1)
    return bool(np.all(gaps <= cell + 1e-12))


def cross_validate(
    taus: ArrayLike,
    amplitudes: ArrayLike,
    compression: IndexSet,
    omega: IndexSet,
    grid_size: int,
    solver_config: SolverConfig | None = None,
) -> CrossValidationReport:
    """Compare the full solver, the compressed solver, the grid oracle and the certificate."""

    n = omega.ambient
    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    observed = atoms(freqs, n)[omega.as_array()] @ amps
    cell = 1.0 / grid_size
    report = CrossValidationReport(grid_size=grid_size)

    outcome = certification_report(freqs, amps, compression, omega, n)
    report.certified = outcome.certified
    if outcome.certified:
        report.objectives["certificate"] = float(np.vdot(outcome.certificate.q[omega.as_array()], observed).real)
    else:
        report.notes.append(f"certificate unavailable: {outcome.reasons}")

    for label, index_set in (("identity", IndexSet.full(n)), ("compressed", compression)):
        solution = solve(ProblemSpec(n=n, omega=omega, observed=observed, compression=index_set), solver_config)
        report.objectives[label] = solution.objective
        estimate = estimate_from_dual(dual_polynomial(solution), observed, omega, n, grid_size, EXACT_THRESHOLD)
        report.supports[label] = estimate.taus.tolist()
        if not solution.converged:
            report.notes.append(f"{label} solve did not converge: {solution.flags}")

    recovery = grid_recover(build_grid_problem(observed, omega, n, grid_size))
    report.objectives["grid"] = recovery.objective
    report.supports["grid"] = recovery.support_taus(uniform_grid(grid_size)).tolist()
    if not recovery.feasible:
        report.notes.append(f"grid residual {recovery.residual:.3e}: sources are off-grid")

    reference = float(np.sum(amps))
    labels = sorted(report.objectives)
    for i, first in enumerate(labels):
        for second in labels[i + 1 :]:
            gap = abs(report.objectives[first] - report.objectives[second])
            agree = gap <= OBJECTIVE_TOL * (1.0 + reference)
            name = f"objective {first} vs {second}"
            if report.certified:
                report.checks.append(ConditionCheck(name, agree, f"gap {gap:.3e}"))
            elif not agree:
                report.notes.append(f"{name} differ by {gap:.3e}")

    grid_support = np.asarray(report.supports["grid"])
    for label in ("identity", "compressed"):
        solver_support = np.asarray(report.supports[label])
        agree = _within_cell(solver_support, grid_support, cell) and _within_cell(grid_support, solver_support, cell)
        name = f"support {label} vs grid"
        if report.certified:
            report.checks.append(ConditionCheck(name, agree, f"{solver_support.tolist()} vs {grid_support.tolist()}"))
        elif not agree:
            report.notes.append(f"{name} differ")

    if not report.passed:
        logger.warning(f"Cross-validation disagreement: {report.failures()}")
    return report
