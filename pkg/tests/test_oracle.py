"""Tests for the grid oracle and cross-validation in src/services/oracle.py."""

import numpy as np
import pytest

from src.models.arrays import IndexSet
from src.services.core_linalg import atoms
from src.services.oracle import build_grid_problem, cross_validate, grid_recover


def on_grid_data(indices, amplitudes, n, grid_size, omega):
    taus = np.asarray(indices) / grid_size
    return taus, atoms(taus, n)[omega.as_array()] @ np.asarray(amplitudes, dtype=float)


class TestGridRecovery:
    def test_on_grid_sources(self):
        n, grid_size = 16, 64
        omega = IndexSet.full(n)
        _, observed = on_grid_data([5, 30], [1.0, 0.4], n, grid_size, omega)
        recovery = grid_recover(build_grid_problem(observed, omega, n, grid_size))
        assert recovery.feasible
        assert recovery.support.tolist() == [5, 30]
        assert recovery.coefficients[[5, 30]] == pytest.approx([1.0, 0.4], abs=1e-6)
        assert recovery.objective == pytest.approx(1.4, abs=1e-6)

    def test_single_source_on_partial_lags(self):
        n, grid_size = 8, 32
        omega = IndexSet((0, 1, 2, 3), n)
        _, observed = on_grid_data([12], [2.0], n, grid_size, omega)
        recovery = grid_recover(build_grid_problem(observed, omega, n, grid_size))
        assert recovery.support.tolist() == [12]
        assert recovery.coefficients[12] == pytest.approx(2.0, abs=1e-6)

    def test_zero_target(self):
        omega = IndexSet.full(4)
        recovery = grid_recover(build_grid_problem(np.zeros(4), omega, 4, 16))
        assert recovery.feasible
        assert recovery.objective == 0.0
        assert recovery.support.size == 0

    def test_off_grid_source_is_infeasible(self):
        n, grid_size = 8, 32
        omega = IndexSet.full(n)
        observed = atoms([0.3 + 0.5 / grid_size], n) @ np.array([1.0])
        recovery = grid_recover(build_grid_problem(observed, omega, n, grid_size))
        assert not recovery.feasible
        assert recovery.residual > 1e-3

    def test_grid_must_be_fine_enough(self):
        with pytest.raises(ValueError):
            build_grid_problem(np.zeros(4), IndexSet.full(4), 4, 15)

    def test_to_dict(self):
        omega = IndexSet.full(4)
        _, observed = on_grid_data([3], [1.0], 4, 16, omega)
        payload = grid_recover(build_grid_problem(observed, omega, 4, 16)).to_dict()
        assert payload["support"] == [3]
        assert payload["feasible"] is True


class TestCrossValidation:
    def test_certified_instance_agrees(self):
        n, grid_size = 16, 64
        omega = IndexSet.full(n)
        compression = IndexSet((0, 1, 2, 5), n)
        taus = np.array([8, 32]) / grid_size
        report = cross_validate(taus, [1.0, 0.7], compression, omega, grid_size)
        assert report.certified
        assert report.passed, report.failures()
        assert set(report.objectives) == {"certificate", "identity", "compressed", "grid"}
        for value in report.objectives.values():
            assert value == pytest.approx(1.7, abs=1e-3)
        assert report.supports["grid"] == pytest.approx(taus.tolist())

    def test_uncertified_instance_only_takes_notes(self):
        n, grid_size = 16, 64
        compression = IndexSet((0, 1, 2, 5), n)
        taus = np.array([4, 20, 36, 52]) / grid_size
        report = cross_validate(taus, [1.0] * 4, compression, IndexSet.full(n), grid_size)
        assert not report.certified
        assert report.checks == []
        assert report.notes[0].startswith("certificate unavailable")
        assert report.to_dict()["certified"] is False


def spaced_grid_indices(rng, count, grid_size, min_cells):
    while True:
        picks = np.sort(rng.choice(grid_size, count, replace=False))
        gaps = np.diff(np.concatenate([picks, picks[:1] + grid_size]))
        if np.all(gaps >= min_cells):
            return picks


@pytest.mark.slow
class TestRandomCrossValidation:
    def test_on_grid_instances_agree(self):
        rng = np.random.default_rng(29)
        n, grid_size = 16, 256
        omega = IndexSet.full(n)
        certified = 0
        for _ in range(100):
            size = int(rng.integers(2, 9))
            others = rng.choice(np.arange(1, n), size - 1, replace=False)
            compression = IndexSet.from_iterable([0, *others.tolist()], n)
            count = int(rng.integers(1, size))
            taus = spaced_grid_indices(rng, count, grid_size, 4) / grid_size
            report = cross_validate(taus, rng.uniform(0.5, 2.0, count), compression, omega, grid_size)
            assert report.passed, report.failures()
            certified += report.certified
        assert certified > 0
