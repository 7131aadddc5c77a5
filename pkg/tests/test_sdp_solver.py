"""Tests for the ADMM engine in src/services/sdp_solver.py."""

import math

import numpy as np
import pytest

from src.models.arrays import IndexSet
from src.models.solver import ProblemSpec, SolverConfig
from src.services.certificate import certify_recovery
from src.services.core_linalg import atom, atoms, circle_distance, hermitian_eig
from src.services.geometry import cantor_array, difference_set
from src.services.sdp_solver import (
    check_dual_feasibility,
    default_lambda,
    dual_polynomial,
    dual_residuals,
    solve,
)
from src.services.source_recovery import EXACT_THRESHOLD, NOISY_THRESHOLD, estimate_from_dual, peaks_of_dual


def lag_data(taus, powers, omega):
    return atoms(np.asarray(taus, dtype=float), omega.ambient)[omega.as_array()] @ np.asarray(powers, dtype=float)


def spread_taus(rng, count, gap):
    while True:
        taus = np.sort(rng.random(count))
        if count == 1 or np.all(circle_distance(taus, np.roll(taus, 1)) >= gap):
            return taus


def compressed_gram(x, compression):
    idx = compression.as_array()
    lags = idx[:, None] - idx[None, :]
    values = x[np.abs(lags)]
    matrix = np.where(lags >= 0, values, values.conj())
    np.fill_diagonal(matrix, x[0].real)
    return matrix


class TestExactProgram:
    def test_single_atom_with_completion(self):
        n = 8
        omega = IndexSet((0, 1, 2), n)
        compression = IndexSet((0, 1, 2), n)
        spec = ProblemSpec(n=n, omega=omega, observed=lag_data([0.3], [2.0], omega), compression=compression)

        sol = solve(spec)

        assert sol.converged
        assert np.allclose(sol.x_hat, 2.0 * atom(0.3, n), atol=1e-5)
        assert "completed 5 undetermined lag(s) from 1 dual root(s)" in sol.flags
        assert sol.objective == pytest.approx(2.0)
        assert sol.duality_gap < 1e-6
        assert check_dual_feasibility(sol, spec).within(1e-8)
        peaks = peaks_of_dual(dual_polynomial(sol), 4 * n, EXACT_THRESHOLD, polish=True)
        assert peaks == pytest.approx([0.3], abs=1e-6)

    def test_zero_data_converges_immediately(self):
        omega = IndexSet.full(3)
        sol = solve(ProblemSpec.identity(3, omega, np.zeros(3)))
        assert sol.converged
        assert sol.iterations == 1
        assert np.allclose(sol.x_hat, 0.0)
        assert sol.objective == 0.0

    @pytest.mark.parametrize("compressed", [False, True])
    def test_cantor_array_recovers_sources(self, compressed):
        array = cantor_array(3)
        n = array.ambient
        omega = IndexSet.full(n)
        taus, powers = [0.2, 0.55], [1.0, 1.5]
        observed = lag_data(taus, powers, omega)
        compression = array if compressed else IndexSet.full(n)

        sol = solve(ProblemSpec(n=n, omega=omega, observed=observed, compression=compression))

        assert sol.converged
        assert np.allclose(sol.x_hat, observed, atol=1e-10)
        estimate = estimate_from_dual(dual_polynomial(sol), observed, omega, n, 16 * n, EXACT_THRESHOLD)
        assert estimate.taus == pytest.approx(taus, abs=1e-6)
        assert estimate.amplitudes == pytest.approx(powers, abs=1e-5)
        feasibility = check_dual_feasibility(sol, ProblemSpec(n=n, omega=omega, observed=observed, compression=compression))
        assert feasibility.stationarity < 1e-8
        assert feasibility.min_eig_s > -1e-8

    def test_completion_from_difference_set_observations(self):
        n = 8
        compression = IndexSet((0, 1, 3), n)
        omega = IndexSet((0, 1, 2, 3), n)
        spec = ProblemSpec(n=n, omega=omega, observed=lag_data([0.3], [1.5], omega), compression=compression)

        sol = solve(spec)

        assert sol.converged
        assert "completed 4 undetermined lag(s) from 1 dual root(s)" in sol.flags
        assert np.allclose(sol.x_hat, 1.5 * atom(0.3, n), atol=1e-5)
        assert sol.determined.tolist() == [True] * 4 + [False] * 4
        assert np.all(sol.q_hat[4:] == 0)

    def test_aliased_compression_is_not_reported_as_converged(self):
        n = 10
        compression = IndexSet((0, 4), n)
        spec = ProblemSpec(n=n, omega=compression, observed=lag_data([0.13], [1.3], compression), compression=compression)

        sol = solve(spec)

        assert not sol.converged
        assert any(flag.startswith("ambiguous completion of 8 undetermined lag(s)") for flag in sol.flags)
        assert any("rank deficient" in flag for flag in sol.flags)
        assert np.allclose(sol.x_hat[[0, 4]], spec.observed)

    def test_completion_can_be_disabled(self):
        n = 6
        omega = IndexSet((0, 1), n)
        spec = ProblemSpec(n=n, omega=omega, observed=lag_data([0.1], [1.0], omega), compression=IndexSet((0, 1), n))
        sol = solve(spec, SolverConfig(complete_undetermined=False))
        assert np.all(sol.x_hat[2:] == 0)
        assert any("undetermined; left at zero" in flag for flag in sol.flags)

    def test_scaling_data_scales_primal_only(self):
        array = cantor_array(3)
        n = array.ambient
        omega = IndexSet.full(n)
        observed = lag_data([0.12, 0.7], [1.0, 1.0], omega)
        base = solve(ProblemSpec(n=n, omega=omega, observed=observed, compression=array))
        scaled = solve(ProblemSpec(n=n, omega=omega, observed=3.0 * observed, compression=array))
        assert np.allclose(scaled.x_hat, 3.0 * base.x_hat, atol=1e-8)
        assert np.allclose(scaled.q_hat, base.q_hat, atol=1e-6)
        assert scaled.objective == pytest.approx(3.0 * base.objective)

    def test_inconsistent_data_diverges(self):
        omega = IndexSet.full(3)
        spec = ProblemSpec.identity(3, omega, np.array([1.0, 2.0, 0.0]))
        sol = solve(spec, SolverConfig(divergence_threshold=1e3))
        assert sol.diverged
        assert not sol.converged
        assert sol.flags[0].startswith("diverged")

    def test_iteration_cap_returns_best_iterate(self):
        n = 8
        omega = IndexSet((0, 1, 2), n)
        spec = ProblemSpec(n=n, omega=omega, observed=lag_data([0.3], [2.0], omega), compression=omega)
        sol = solve(spec, SolverConfig(max_iters=1))
        assert not sol.converged
        assert sol.iterations == 1
        assert "not converged after 1 iterations; best iterate returned" in sol.flags
        assert "dual from non-converged solution" in dual_polynomial(sol).flags

    def test_history_is_recorded_on_request(self):
        omega = IndexSet.full(4)
        spec = ProblemSpec.identity(4, omega, lag_data([0.4], [1.0], omega))
        sol = solve(spec, SolverConfig(keep_history=True))
        assert len(sol.history) == sol.iterations
        assert {"primal_residual", "dual_residual", "rho", "objective"} <= set(sol.history[-1])
        assert "history" in sol.to_dict(include_history=True)
        assert "history" not in sol.to_dict()


class TestDenoiseProgram:
    def test_vanishing_lambda_matches_exact_data(self):
        n = 8
        omega = IndexSet.full(n)
        observed = lag_data([0.15, 0.6], [1.0, 2.0], omega)
        spec = ProblemSpec.identity(n, omega, observed, mode="denoise", lam=1e-6)
        sol = solve(spec, SolverConfig(divergence_threshold=1e12))
        assert np.linalg.norm(sol.x_hat - observed) <= 1e-3 * np.linalg.norm(observed)

    def test_noisy_peaks_near_sources(self, rng):
        n = 16
        omega = IndexSet.full(n)
        taus = [0.1, 0.4, 0.75]
        clean = lag_data(taus, [1.0, 1.0, 1.0], omega)
        noise = 1e-3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        observed = clean + noise
        spec = ProblemSpec.identity(n, omega, observed, mode="denoise", lam=0.05)

        sol = solve(spec)
        estimate = estimate_from_dual(dual_polynomial(sol), observed, omega, n, 16 * n, NOISY_THRESHOLD)

        assert estimate.count >= 1
        gaps = circle_distance(np.asarray(taus)[:, None], estimate.taus[None, :])
        assert np.all(gaps.min(axis=1) < 1e-2)
        assert hermitian_eig(compressed_gram(sol.x_hat, omega)).values[-1] > -1e-3

    def test_denoise_dual_normalization(self):
        n = 6
        omega = IndexSet.full(n)
        observed = lag_data([0.25], [1.0], omega)
        spec = ProblemSpec.identity(n, omega, observed, mode="denoise", lam=0.1)
        sol = solve(spec)
        assert sol.converged
        assert np.allclose(sol.q_hat, (observed - sol.x_hat) / 0.1)
        assert sol.x_hat[0].real < 1.0


class TestDefaultLambda:
    def test_formula(self):
        expected = 2.0 * math.sqrt(10 * math.log(28) / 100)
        assert default_lambda(4.0, 10, 28, 100) == pytest.approx(expected)

    def test_degenerate_aperture(self):
        assert default_lambda(1.0, 1, 1, 10) == 0.0

    def test_rejects_invalid_inputs(self):
        with pytest.raises(ValueError):
            default_lambda(-1.0, 3, 8, 10)
        with pytest.raises(ValueError):
            default_lambda(1.0, 3, 8, 0)


class TestDualResiduals:
    def test_trivial_pair(self):
        n = 5
        q = np.zeros(n, dtype=complex)
        q[0] = 1.0
        report = dual_residuals(q, np.zeros((3, 3)), IndexSet((0, 1, 3), n), IndexSet.full(n))
        assert report.stationarity == 0.0
        assert report.min_eig_s == 0.0
        assert report.q_off_support == 0.0

    def test_reports_off_support_mass(self):
        n = 4
        q = np.array([1.0, 0.0, 0.0, 0.5])
        report = dual_residuals(q, np.zeros((2, 2)), IndexSet((0, 1), n), IndexSet((0, 1, 2), n))
        assert report.q_off_support == pytest.approx(0.5)
        assert not report.within(1e-6)


class TestProblemSpec:
    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            ProblemSpec.identity(4, IndexSet((0, 1), 4), np.zeros(3))

    def test_rejects_compression_without_zero(self):
        with pytest.raises(ValueError):
            ProblemSpec(n=4, omega=IndexSet.full(4), observed=np.zeros(4), compression=IndexSet((1, 2), 4))

    def test_rejects_negative_lambda(self):
        with pytest.raises(ValueError):
            ProblemSpec.identity(4, IndexSet.full(4), np.zeros(4), mode="denoise", lam=-1.0)

    def test_dict_round_trip(self):
        spec = ProblemSpec(
            n=10,
            omega=IndexSet.full(10),
            observed=np.arange(10) * (1 + 1j),
            compression=cantor_array(3),
            mode="denoise",
            lam=0.25,
        )
        restored = ProblemSpec.from_dict(spec.to_dict())
        assert restored.compression == spec.compression
        assert restored.omega == spec.omega
        assert np.array_equal(restored.observed, spec.observed)
        assert (restored.mode, restored.lam) == ("denoise", 0.25)


class TestSolverConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert (cfg.rho, cfg.alpha, cfg.eps_abs, cfg.eps_rel, cfg.max_iters) == (1.0, 1.5, 1e-7, 1e-6, 50_000)

    def test_overrides_are_validated(self):
        assert SolverConfig().with_overrides(rho=2.0).rho == 2.0
        with pytest.raises(ValueError):
            SolverConfig().with_overrides(alpha=2.5)
        with pytest.raises(ValueError):
            SolverConfig(unknown=1)


@pytest.mark.slow
class TestRandomInstances:
    def test_converged_solutions_reproduce_the_full_lag_vector(self):
        rng = np.random.default_rng(5)
        certified = recovered = 0
        for _ in range(100):
            n = int(rng.integers(8, 65))
            size = int(rng.integers(2, min(8, n) + 1))
            others = rng.choice(np.arange(1, n), size - 1, replace=False)
            compression = IndexSet.from_iterable([0, *others.tolist()], n)
            omega = difference_set(compression)
            count = int(rng.integers(1, size))
            taus = rng.random(count)
            powers = rng.uniform(0.5, 2.0, count)
            truth = atoms(taus, n) @ powers
            spec = ProblemSpec(n=n, omega=omega, observed=truth[omega.as_array()], compression=compression)

            sol = solve(spec)

            if sol.converged:
                assert np.linalg.norm(sol.x_hat - truth) <= 1e-4 * np.linalg.norm(truth)
            if certify_recovery(taus, powers, compression, omega, n):
                certified += 1
                recovered += int(sol.converged)
        assert certified >= 50
        assert recovered >= 0.9 * certified

    def test_identity_and_compressed_programs_agree(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(8, 33))
            size = int(rng.integers(3, min(8, n) + 1))
            others = rng.choice(np.arange(1, n), size - 1, replace=False)
            compression = IndexSet.from_iterable([0, *others.tolist()], n)
            omega = IndexSet.full(n)
            count = int(rng.integers(1, size))
            taus = spread_taus(rng, count, 0.25 / n)
            powers = rng.uniform(0.5, 2.0, count)
            observed = lag_data(taus, powers, omega)

            full = solve(ProblemSpec.identity(n, omega, observed))
            compressed = solve(ProblemSpec(n=n, omega=omega, observed=observed, compression=compression))

            assert full.converged and compressed.converged
            assert compressed.objective == pytest.approx(full.objective, rel=1e-4)
            assert np.linalg.norm(compressed.x_hat - full.x_hat) <= 1e-4 * np.linalg.norm(full.x_hat)
            if not certify_recovery(taus, powers, compression, omega, n):
                continue
            peaks = [
                estimate_from_dual(dual_polynomial(sol), observed, omega, n, 16 * n, EXACT_THRESHOLD).taus
                for sol in (full, compressed)
            ]
            assert peaks[0].size == peaks[1].size == count
            assert np.all(circle_distance(peaks[0][:, None], peaks[1][None, :]).min(axis=1) <= 1e-5)

    def test_duality_gap_closes_on_random_inputs(self):
        rng = np.random.default_rng(23)
        for trial in range(20):
            n = int(rng.integers(6, 17))
            omega = IndexSet.full(n)
            taus = rng.random(2)
            observed = lag_data(taus, rng.uniform(0.5, 2.0, 2), omega)
            if trial % 2:
                observed = observed + 0.1 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
                spec = ProblemSpec.identity(n, omega, observed, mode="denoise", lam=0.3)
            else:
                spec = ProblemSpec(n=n, omega=omega, observed=observed, compression=IndexSet((0, 1, 2, 4), n))

            sol = solve(spec)

            if sol.converged:
                assert sol.duality_gap <= 1e-4 * (1.0 + abs(sol.objective))
