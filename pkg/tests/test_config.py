"""Tests for settings, scenario files, manifests and digests."""

import json

import pytest

from src.config import Settings, SettingsError, get_settings, load_settings_file, merge_settings, reset_settings_cache
from src.manifest import build_run_manifest, write_manifest
from src.models.scenario import ScenarioError, load_scenario
from src.models.solver import SolverConfig
from src.utils.digest import config_digest, digest_matches
from src.utils.paths import SCENARIOS_DIR


class TestSettings:
    def test_defaults(self):
        settings = get_settings()
        assert settings.solver == SolverConfig()
        assert settings.grid_size(28) == 16 * 28
        assert settings.noisy_peak_threshold == pytest.approx(0.99)

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("CANM_RHO", "2.5")
        monkeypatch.setenv("CANM_MAX_ITERS", "300")
        monkeypatch.setenv("CANM_ADAPT_RHO", "off")
        monkeypatch.setenv("CANM_WORKERS", "3")
        reset_settings_cache()
        settings = get_settings()
        assert settings.solver.rho == 2.5
        assert settings.solver.max_iters == 300
        assert settings.solver.adapt_rho is False
        assert settings.workers == 3

    def test_settings_are_cached(self, monkeypatch):
        first = get_settings()
        monkeypatch.setenv("CANM_RHO", "4.0")
        assert get_settings() is first

    @pytest.mark.parametrize("name, value", [("CANM_RHO", "fast"), ("CANM_ALPHA", "3.0"), ("CANM_WORKERS", "0")])
    def test_invalid_environment(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        reset_settings_cache()
        with pytest.raises(SettingsError):
            get_settings()

    def test_merge_keeps_unrelated_solver_fields(self):
        merged = merge_settings(Settings(), {"solver": {"eps_abs": 1e-5}, "grid_oversampling": 8})
        assert merged.solver.eps_abs == 1e-5
        assert merged.solver.rho == 1.0
        assert merged.grid_size(10) == 80

    def test_merge_rejects_unknown_keys(self):
        with pytest.raises(SettingsError):
            merge_settings(Settings(), {"colour": "blue"})

    def test_config_file(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"solver": {"max_iters": 123}, "output_dir": str(tmp_path / "out")}))
        settings = load_settings_file(path)
        assert settings.solver.max_iters == 123
        assert settings.output_dir == tmp_path / "out"

    def test_config_file_errors(self, tmp_path):
        with pytest.raises(SettingsError):
            load_settings_file(tmp_path / "missing.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(SettingsError):
            load_settings_file(broken)
        listing = tmp_path / "list.json"
        listing.write_text("[1, 2]")
        with pytest.raises(SettingsError):
            load_settings_file(listing)


class TestScenario:
    @pytest.mark.parametrize("name", ["cantor4_exact.json", "cantor2_too_many.json", "cantor4_doa.json", "ula_noisy.json"])
    def test_bundled_scenarios_load(self, name):
        scenario = load_scenario(SCENARIOS_DIR / name)
        assert scenario.source_model().count == len(scenario.taus)

    def test_cantor_scenario_sets(self):
        scenario = load_scenario(SCENARIOS_DIR / "cantor4_exact.json")
        assert scenario.aperture() == 28
        assert len(scenario.omega_set()) == 28
        assert len(scenario.compression_set()) == 16
        assert scenario.compression_set("identity").is_full

    def test_lambda_alias_and_solver_overrides(self):
        scenario = load_scenario(SCENARIOS_DIR / "ula_noisy.json")
        assert scenario.lam == 0.5
        assert scenario.solver_config(SolverConfig()).max_iters == 20000

    def test_explicit_array(self, tmp_path):
        path = tmp_path / "explicit.json"
        path.write_text(json.dumps({"taus": [0.3], "array": {"type": "explicit", "indices": [3, 0, 1]}}))
        scenario = load_scenario(path)
        assert scenario.index_array().indices == (0, 1, 3)
        assert scenario.omega_set().indices == (0, 1, 2, 3)

    @pytest.mark.parametrize(
        "payload",
        [
            {"taus": [0.1], "array": {"type": "cantor"}},
            {"taus": [0.1], "n": 8},
            {"taus": [0.1, 0.2], "powers": [1.0], "array": {"type": "ula", "n": 4}},
            {"taus": [1.5], "n": 4, "omega": "full", "compression": "identity"},
            {"taus": [0.1], "n": 4, "omega": "full", "compression": "identity", "extra": 1},
            {"taus": [0.1], "n": 4, "omega": "full", "compression": "identity", "solver": {"alpha": 9}},
        ],
    )
    def test_invalid_scenarios(self, tmp_path, payload):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "nope.json")


class TestManifest:
    def test_digest_is_stable(self):
        assert config_digest({"b": 1, "a": [1, 2]}) == config_digest({"a": [1, 2], "b": 1})
        assert config_digest({"a": 1}).startswith("sha256=")
        assert digest_matches({"a": 1}, config_digest({"a": 1}))
        assert not digest_matches({"a": 2}, config_digest({"a": 1}))
        assert not digest_matches({"a": 1}, None)

    def test_manifest_round_trip(self, tmp_path):
        settings = get_settings()
        manifest = build_run_manifest("cantor", settings, seed=4, extra={"arguments": {"order": "3"}})
        assert digest_matches(manifest.config, manifest.config_digest)
        assert manifest.reference() == {"manifest": "manifest.json", "config_digest": manifest.config_digest}
        path = write_manifest(manifest, tmp_path)
        written = json.loads(path.read_text())
        assert written["seed"] == 4
        assert written["finished_at"] is not None
        assert written["config"]["arguments"] == {"order": "3"}
