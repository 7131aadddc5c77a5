"""Tests for the trial worker pool in src/queue."""

import pytest

from src.queue import TrialJob, run_trials


def square(job: TrialJob):
    if job.params.get("fail"):
        raise RuntimeError(f"trial {job.trial_id} refused")
    return {"value": job.trial_id**2, "seed": job.seed}


class TestRunTrials:
    def test_results_sorted_by_trial_id(self):
        jobs = [TrialJob(trial_id=i, seed=100 + i) for i in (3, 0, 2, 1)]
        results = run_trials(jobs, square, workers=3)
        assert [r.trial_id for r in results] == [0, 1, 2, 3]
        assert [r.value["value"] for r in results] == [0, 1, 4, 9]
        assert all(r.ok for r in results)
        assert results[2].seed == 102

    def test_failures_are_captured(self):
        jobs = [TrialJob(trial_id=0), TrialJob(trial_id=1, params={"fail": True}), TrialJob(trial_id=2)]
        results = run_trials(jobs, square)
        assert [r.ok for r in results] == [True, False, True]
        assert results[1].error == "RuntimeError: trial 1 refused"
        assert results[1].value == {}

    def test_no_jobs(self):
        assert run_trials([], square, workers=2) == []

    def test_worker_count_must_be_positive(self):
        with pytest.raises(ValueError):
            run_trials([TrialJob(trial_id=0)], square, workers=0)

    def test_negative_trial_id_rejected(self):
        with pytest.raises(ValueError):
            TrialJob(trial_id=-1)
