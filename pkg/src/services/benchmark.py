"""Wall-clock comparison of the full and compressed programs on Cantor arrays."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List

import numpy as np

from src.logger import get_logger, log_with_context
from src.models.solver import ProblemSpec, SolverConfig
from src.queue import TrialJob, TrialResult, run_trials
from src.services.core_linalg import atoms
from src.services.doa_pipeline import random_source_model
from src.services.geometry import cantor_array, difference_set
from src.services.sdp_solver import solve

logger = get_logger()

BENCH_COLUMNS = (
    "order",
    "aperture",
    "elements",
    "mean_anm_seconds",
    "mean_canm_seconds",
    "speedup",
    "anm_nonconverged",
    "canm_nonconverged",
    "trials",
)


@dataclass(slots=True)
class BenchRow:
    order: int
    aperture: int
    elements: int
    mean_anm_seconds: float
    mean_canm_seconds: float
    speedup: float
    anm_nonconverged: int
    canm_nonconverged: int
    trials: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def bench_trial(job: TrialJob) -> Dict[str, Any]:
    """Solve one random instance with identity and Cantor compression; only solve() is timed."""

    order = int(job.params["order"])
    sources = int(job.params["sources"])
    solver_config = SolverConfig.model_validate(job.params.get("solver", {}))

    array = cantor_array(order)
    n = array.ambient
    omega = difference_set(array)
    rng = np.random.default_rng(job.seed)
    model = random_source_model(rng, sources, n, power_range=(0.5, 2.0))
    observed = atoms(model.taus, n)[omega.as_array()] @ model.powers

    anm = solve(ProblemSpec.identity(n, omega, observed), solver_config)
    canm = solve(ProblemSpec(n=n, omega=omega, observed=observed, compression=array), solver_config)
    return {
        "order": order,
        "anm_seconds": anm.wall_time_seconds,
        "canm_seconds": canm.wall_time_seconds,
        "anm_converged": anm.converged,
        "canm_converged": canm.converged,
    }


def summarize(order: int, results: Iterable[TrialResult]) -> BenchRow:
    array = cantor_array(order)
    completed = [r.value for r in results if r.ok and r.value.get("order") == order]
    anm_times = [v["anm_seconds"] for v in completed]
    canm_times = [v["canm_seconds"] for v in completed]
    mean_anm = float(np.mean(anm_times)) if anm_times else float("nan")
    mean_canm = float(np.mean(canm_times)) if canm_times else float("nan")
    return BenchRow(
        order=order,
        aperture=array.ambient,
        elements=len(array),
        mean_anm_seconds=mean_anm,
        mean_canm_seconds=mean_canm,
        speedup=mean_anm / mean_canm if mean_canm > 0 else float("nan"),
        anm_nonconverged=sum(not v["anm_converged"] for v in completed),
        canm_nonconverged=sum(not v["canm_converged"] for v in completed),
        trials=len(completed),
    )


def run_bench(
    orders: Iterable[int],
    sources: int = 8,
    trials: int = 10,
    *,
    seed: int = 0,
    solver_config: SolverConfig | None = None,
    workers: int = 1,
) -> List[BenchRow]:
    orders = list(orders)
    solver_payload = (solver_config or SolverConfig()).model_dump()
    seeds = np.random.SeedSequence(seed).generate_state(len(orders) * trials)
    jobs = []
    for i, order in enumerate(orders):
        for t in range(trials):
            trial_id = i * trials + t
            jobs.append(
                TrialJob(
                    trial_id=trial_id,
                    seed=int(seeds[trial_id]),
                    params={"order": order, "sources": sources, "solver": solver_payload},
                )
            )

    bench_logger = log_with_context(logger, orders=",".join(map(str, orders)), trials=trials)
    bench_logger.info(f"Benchmarking {len(jobs)} solve pair(s) with p={sources}")
    results = run_trials(jobs, bench_trial, workers)
    failed = [r for r in results if not r.ok]
    if failed:
        bench_logger.warning(f"{len(failed)} benchmark trial(s) failed: {[r.error for r in failed]}")
    return [summarize(order, results) for order in orders]


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.to_dict())
    return buffer.getvalue()
