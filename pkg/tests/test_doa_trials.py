"""Tests for the seeded localization trials in src/services/doa_trials.py."""

import pytest

from src.queue import TrialJob
from src.services.doa_trials import localization_trial, run_localization_trials


class TestLocalizationTrial:
    def test_single_trial_fields(self):
        job = TrialJob(
            trial_id=0,
            seed=3,
            params={"order": 3, "sources": 2, "snapshots": 400, "snr_db": 10.0, "compression": "coarray"},
        )
        value = localization_trial(job)
        assert set(value) == {
            "localized",
            "sources_localized",
            "estimated",
            "median_error",
            "max_error",
            "lambda",
            "converged",
        }
        assert 0 <= value["sources_localized"] <= 2
        assert value["lambda"] > 0

    def test_summary_is_seeded(self):
        first = run_localization_trials(3, 2, 400, 10.0, 2, seed=7)
        second = run_localization_trials(3, 2, 400, 10.0, 2, seed=7)
        assert first["failed_trials"] == 0
        assert [t["value"] for t in first["per_trial"]] == [t["value"] for t in second["per_trial"]]
        assert first["match_radius"] == pytest.approx(0.05)
        assert first["localized_sources"] == sum(t["value"]["sources_localized"] for t in first["per_trial"])


@pytest.mark.slow
class TestHardConfiguration:
    def test_every_trial_completes_and_most_sources_are_found(self):
        summary = run_localization_trials(order=4, sources=8, snapshots=100, snr_db=-5.0, trials=20, seed=0)
        assert summary["failed_trials"] == 0
        assert len(summary["per_trial"]) == 20
        assert summary["match_radius"] == pytest.approx(0.5 / 28)
        assert summary["source_localization_rate"] >= 0.5
