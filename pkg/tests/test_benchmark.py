"""Tests for the ANM versus C-ANM timing comparison in src/services/benchmark.py."""

import math

import pytest

from src.queue import TrialJob
from src.services.benchmark import BENCH_COLUMNS, bench_trial, rows_to_csv, run_bench


class TestBenchTrial:
    def test_reports_both_programs(self):
        value = bench_trial(TrialJob(trial_id=0, seed=4, params={"order": 3, "sources": 3}))
        assert value["order"] == 3
        assert {"anm_converged", "canm_converged"} <= set(value)
        assert value["anm_seconds"] > 0 and value["canm_seconds"] > 0

    def test_csv_header(self):
        rows = run_bench([2], sources=1, trials=1, seed=2)
        assert rows_to_csv(rows).splitlines()[0] == ",".join(BENCH_COLUMNS)
        assert rows[0].trials == 1
        assert not math.isnan(rows[0].speedup)


@pytest.mark.slow
class TestSpeedupTrend:
    def test_compression_pays_off_on_larger_arrays(self):
        rows = run_bench([4, 5], sources=8, trials=3, seed=0)
        assert [row.trials for row in rows] == [3, 3]
        assert rows[-1].mean_canm_seconds < rows[-1].mean_anm_seconds
        assert rows[-1].speedup > 1.0
