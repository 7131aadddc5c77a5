"""Command-line entry point: cantor, certify, recover, doa and bench.

Reports go to stdout as JSON, logs go to stderr, files go to ``--out``.
Exit codes: 0 success, 1 domain failure (hypothesis or recovery), 2 usage or
schema error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from src.config import Settings, SettingsError, get_settings, load_settings_file, merge_settings
from src.logger import get_logger, log_failure, log_success, log_with_context
from src.manifest import RunManifest, build_run_manifest, write_manifest
from src.models.scenario import Scenario, ScenarioError, load_scenario
from src.models.signal import SourceEstimate, TrigPolynomial
from src.models.solver import ProblemSpec
from src.services.benchmark import rows_to_csv, run_bench
from src.services.certificate import HypothesisError, certification_report
from src.services.core_linalg import atoms, eval_poly, uniform_grid
from src.services.doa_pipeline import PipelineError, run_doa, snr_to_sigma2
from src.services.geometry import CapacityError, cantor_array, compression_ratio, is_complete
from src.services.sdp_solver import default_lambda, dual_polynomial, solve
from src.services.source_recovery import NotPsdError, estimate_from_dual, match_sources, vandermonde_decompose
from src.utils.paths import ensure_output_dir

logger = get_logger()

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

EXACT_MATCH_RADIUS = 1e-4
SCENARIO_HELP = "Scenario JSON file, or the name of a bundled scenario such as cantor4_exact"


@dataclass(slots=True)
class CommandContext:
    args: argparse.Namespace
    settings: Settings
    out_dir: Path
    manifest: RunManifest

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.out_dir / name
        document = {**payload, **self.manifest.reference()}
        path.write_text(json.dumps(document, indent=2) + "\n")
        self.manifest.outputs.append(name)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.manifest.outputs.append(name)
        return path


def dual_grid_csv(poly: TrigPolynomial, grid_size: int) -> str:
    """(tau, Re Q(tau)) samples for external plotting."""

    grid = uniform_grid(grid_size)
    values = eval_poly(poly, grid).real
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["tau", "re_q"])
    for tau, value in zip(grid, values):
        writer.writerow([f"{tau:.12g}", f"{value:.12g}"])
    return buffer.getvalue()


def _emit(report: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    sys.stdout.flush()


def _seed(ctx: CommandContext, scenario: Scenario | None = None) -> int | None:
    if ctx.args.seed is not None:
        return ctx.args.seed
    return scenario.seed if scenario is not None else None


def _grid_size(ctx: CommandContext, n: int, scenario: Scenario | None = None) -> int:
    if ctx.args.grid is not None:
        return ctx.args.grid
    if scenario is not None and scenario.grid is not None:
        return scenario.grid
    return ctx.settings.grid_size(n)


def cmd_cantor(ctx: CommandContext) -> int:
    array = cantor_array(ctx.args.order)
    report = {
        "order": ctx.args.order,
        "elements": len(array),
        "aperture": array.ambient,
        "complete": is_complete(array),
        "compression_ratio": compression_ratio(array),
        "indices": list(array.indices),
    }
    ctx.write_json("cantor.json", report)
    _emit(report)
    return EXIT_OK


def cmd_certify(ctx: CommandContext) -> int:
    scenario = load_scenario(ctx.args.scenario)
    model = scenario.source_model()
    n = scenario.aperture()
    outcome = certification_report(
        model.taus,
        model.powers,
        scenario.compression_set(),
        scenario.omega_set(),
        n,
        _grid_size(ctx, n, scenario),
    )
    report = outcome.to_dict()
    ctx.write_json("certificate.json", report)
    _emit({"certified": outcome.certified, "reasons": outcome.reasons})
    return EXIT_OK if outcome.certified else EXIT_DOMAIN


def _noisy_observation(scenario: Scenario, exact: np.ndarray, seed: int | None) -> tuple[np.ndarray, float]:
    if scenario.snr_db is None:
        return exact, 0.0
    sigma2 = snr_to_sigma2(scenario.source_model().powers, scenario.snr_db)
    rng = np.random.default_rng(seed)
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(exact.shape) + 1j * rng.standard_normal(exact.shape))
    return exact + noise, sigma2


def cmd_recover(ctx: CommandContext) -> int:
    scenario = load_scenario(ctx.args.scenario)
    model = scenario.source_model()
    n = scenario.aperture()
    omega = scenario.omega_set()
    compression = scenario.compression_set(ctx.args.compression)
    seed = _seed(ctx, scenario)
    solver_config = scenario.solver_config(ctx.settings.solver)

    exact = atoms(model.taus, n)[omega.as_array()] @ model.powers
    if scenario.mode == "exact":
        observed, lam = exact, 0.0
        threshold = ctx.settings.exact_peak_threshold
        radius = ctx.args.radius or EXACT_MATCH_RADIUS
    else:
        observed, sigma2 = _noisy_observation(scenario, exact, seed)
        lam = scenario.lam if scenario.lam is not None else default_lambda(sigma2, len(omega), n, scenario.L or 1)
        threshold = ctx.settings.noisy_peak_threshold
        radius = ctx.args.radius or 0.5 / n

    problem = ProblemSpec(n=n, omega=omega, observed=observed, compression=compression, mode=scenario.mode, lam=lam)
    solution = solve(problem, solver_config)
    poly = dual_polynomial(solution)
    grid_size = _grid_size(ctx, n, scenario)
    estimate = estimate_from_dual(poly, observed, omega, n, grid_size, threshold)
    match = match_sources(estimate, model, radius)

    alternative: SourceEstimate | None = None
    rank_tol = ctx.settings.exact_rank_tol if scenario.mode == "exact" else ctx.settings.noisy_rank_tol
    try:
        alternative = vandermonde_decompose(solution.x_hat, rank_tol)
    except NotPsdError as exc:
        solution.flags.append(f"vandermonde decomposition skipped: {exc}")

    ctx.write_json("solution.json", {"problem": problem.to_dict(), "solution": solution.to_dict(include_history=True)})
    ctx.write_json("estimate.json", {"estimate": estimate.to_dict(), "match": match.to_dict(), "peak_threshold": threshold})
    ctx.write_text("estimate.csv", estimate.to_csv())
    ctx.write_text("dual_grid.csv", dual_grid_csv(poly, grid_size))

    recovered = solution.converged and match.all_within(radius) and not match.spurious
    report = {
        "compression": "identity" if compression.is_full else list(compression.indices),
        "mode": scenario.mode,
        "lambda": lam,
        "converged": solution.converged,
        "objective": solution.objective,
        "wall_time_seconds": solution.wall_time_seconds,
        "estimate": estimate.to_dict(),
        "vandermonde": alternative.to_dict() if alternative is not None else None,
        "errors": [m.error for m in match.matches],
        "max_error": match.max_error,
        "recovered": recovered,
        "flags": solution.flags,
    }
    _emit(report)
    return EXIT_OK if recovered else EXIT_DOMAIN


def cmd_doa(ctx: CommandContext) -> int:
    scenario = load_scenario(ctx.args.scenario)
    model = scenario.source_model()
    array = scenario.index_array()
    n = array.ambient
    seed = _seed(ctx, scenario)
    sigma2 = snr_to_sigma2(model.powers, scenario.snr_db) if scenario.snr_db is not None else 0.0
    radius = ctx.args.radius or 0.5 / n

    if ctx.args.compare:
        labels: List[str] = ["identity", "coarray"]
    else:
        labels = [ctx.args.compression or (scenario.compression if isinstance(scenario.compression, str) else "coarray")]

    runs: Dict[str, Any] = {}
    success = True
    for label in labels:
        outcome = run_doa(
            model,
            array,
            scenario.L,
            sigma2,
            scenario.lam,
            scenario.solver_config(ctx.settings.solver),
            seed,
            compression=label,
            grid_size=_grid_size(ctx, n, scenario),
            settings=ctx.settings,
        )
        match = match_sources(outcome.estimate, model, radius)
        localized = match.all_within(radius)
        success = success and localized
        ctx.write_json(
            f"estimate_{label}.json",
            {"estimate": outcome.estimate.to_dict(), "match": match.to_dict(), "metadata": outcome.metadata()},
        )
        ctx.write_text(f"estimate_{label}.csv", outcome.estimate.to_csv())
        ctx.write_text(
            f"dual_grid_{label}.csv", dual_grid_csv(dual_polynomial(outcome.solution), _grid_size(ctx, n, scenario))
        )
        runs[label] = {
            **outcome.metadata(),
            "snr_db": outcome.snr_db,
            "converged": outcome.solution.converged,
            "wall_time_seconds": outcome.solution.wall_time_seconds,
            "estimate": outcome.estimate.to_dict(),
            "median_error": match.median_error,
            "max_error": match.max_error,
            "localized": localized,
        }

    _emit({"runs": runs, "match_radius": radius, "localized": success})
    return EXIT_OK if success else EXIT_DOMAIN


def cmd_bench(ctx: CommandContext) -> int:
    rows = run_bench(
        ctx.args.orders,
        ctx.args.sources,
        ctx.args.trials,
        seed=ctx.args.seed if ctx.args.seed is not None else 0,
        solver_config=ctx.settings.solver,
        workers=ctx.args.workers or ctx.settings.workers,
    )
    ctx.write_text("bench.csv", rows_to_csv(rows))
    _emit({"rows": [row.to_dict() for row in rows]})
    return EXIT_OK if all(row.trials > 0 for row in rows) else EXIT_DOMAIN


COMMANDS: Dict[str, Callable[[CommandContext], int]] = {
    "cantor": cmd_cantor,
    "certify": cmd_certify,
    "recover": cmd_recover,
    "doa": cmd_doa,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON settings file overlaid on the environment")
    common.add_argument("--seed", type=int, help="Random seed (overrides the scenario seed)")
    common.add_argument("--out", type=Path, help="Output directory (default: settings output_dir)")
    common.add_argument("--grid", type=int, help="Dense grid size for peak search and plots")
    common.add_argument("--tol", type=float, help="Solver absolute tolerance (eps_abs)")

    parser = argparse.ArgumentParser(prog="canm", description="Compressed positive atomic norm toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    cantor = sub.add_parser("cantor", parents=[common], help="Print a Cantor array and its co-array completeness")
    cantor.add_argument("--order", type=int, required=True)

    certify = sub.add_parser("certify", parents=[common], help="Build and verify a dual certificate")
    certify.add_argument("scenario", type=Path, help=SCENARIO_HELP)

    recover = sub.add_parser("recover", parents=[common], help="Solve from exact or noisy lag observations")
    recover.add_argument("scenario", type=Path, help=SCENARIO_HELP)
    recover.add_argument("--compression", choices=["identity", "coarray"])
    recover.add_argument("--radius", type=float, help="Matching radius for declaring a source recovered")

    doa = sub.add_parser("doa", parents=[common], help="Sparse-array DOA pipeline")
    doa.add_argument("scenario", type=Path, help=SCENARIO_HELP)
    doa.add_argument("--compression", choices=["identity", "coarray"])
    doa.add_argument("--compare", action="store_true", help="Run both identity and co-array compression")
    doa.add_argument("--radius", type=float, help="Matching radius (default 0.5/N)")

    bench = sub.add_parser("bench", parents=[common], help="Time full versus compressed programs")
    bench.add_argument("--orders", type=int, nargs="+", default=[3, 4, 5, 6])
    bench.add_argument("--sources", type=int, default=8)
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--workers", type=int)
    return parser


def _resolve_settings(args: argparse.Namespace) -> Settings:
    settings = load_settings_file(args.config) if args.config else get_settings()
    if args.tol is not None:
        settings = merge_settings(settings, {"solver": {"eps_abs": args.tol}})
    return settings


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cmd_logger = log_with_context(logger, command=args.command, seed=args.seed)

    try:
        settings = _resolve_settings(args)
        out_dir = ensure_output_dir(args.out or settings.output_dir)
        extra: Dict[str, Any] = {"arguments": {k: str(v) for k, v in vars(args).items() if v is not None}}
        if getattr(args, "scenario", None) is not None:
            extra["scenario"] = load_scenario(args.scenario).model_dump(mode="json", by_alias=True)
        manifest = build_run_manifest(
            args.command, settings, config_path=args.config, seed=args.seed, extra=extra
        )
        ctx = CommandContext(args=args, settings=settings, out_dir=out_dir, manifest=manifest)
        code = COMMANDS[args.command](ctx)
        write_manifest(manifest, out_dir)
    except (HypothesisError, PipelineError, NotPsdError, CapacityError) as exc:
        log_failure(cmd_logger, f"{args.command} failed", exc)
        _emit({"error": str(exc)})
        return EXIT_DOMAIN
    except (ScenarioError, SettingsError, ValueError) as exc:
        # pydantic ValidationError is a ValueError
        log_failure(cmd_logger, "Invalid input", exc)
        _emit({"error": str(exc)})
        return EXIT_USAGE

    if code == EXIT_OK:
        log_success(cmd_logger, f"{args.command} finished")
    else:
        cmd_logger.warning(f"{args.command} finished with exit code {code}")
    return code
