"""Application configuration helpers."""

from __future__ import annotations

import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Final

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.models.solver import SolverConfig

# Load environment variables from .env file
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(dotenv_path=env_path)


class SettingsError(RuntimeError):
    """Raised when configuration is invalid or incomplete."""


class Settings(BaseModel):
    """Runtime settings loaded from environment variables and config files."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    solver: SolverConfig = Field(default_factory=SolverConfig)
    grid_oversampling: int = Field(default=16, ge=4)
    exact_peak_threshold: float = Field(default=1.0 - 1e-6, gt=0, lt=1)
    noisy_peak_threshold: float = Field(default=1.0 - 1e-2, gt=0, lt=1)
    exact_rank_tol: float = Field(default=1e-8, gt=0)
    noisy_rank_tol: float = Field(default=1e-2, gt=0)
    output_dir: Path = Path("outputs")
    workers: int = Field(default=1, ge=1)

    def grid_size(self, n: int) -> int:
        """Default dense-grid size for a degree-(n-1) polynomial."""
        return self.grid_oversampling * n


_TRUE_VALUES: Final[set[str]] = {"1", "true", "yes", "on"}

_SOLVER_ENV: Final[Dict[str, str]] = {
    "CANM_RHO": "rho",
    "CANM_ALPHA": "alpha",
    "CANM_EPS_ABS": "eps_abs",
    "CANM_EPS_REL": "eps_rel",
    "CANM_MAX_ITERS": "max_iters",
    "CANM_ADAPT_RHO": "adapt_rho",
}


def _parse_bool_env(raw_value: str | None, *, default: bool = False) -> bool:
    """Convert an environment variable string to a boolean value."""

    if raw_value is None:
        return default
    return raw_value.strip().lower() in _TRUE_VALUES


def _solver_overrides_from_env() -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for env_name, field_name in _SOLVER_ENV.items():
        raw = os.getenv(env_name)
        if raw is None or not raw.strip():
            continue
        if field_name == "adapt_rho":
            overrides[field_name] = _parse_bool_env(raw)
        elif field_name == "max_iters":
            overrides[field_name] = int(raw)
        else:
            overrides[field_name] = float(raw)
    return overrides


def _build_settings() -> Settings:
    try:
        solver = SolverConfig.model_validate(_solver_overrides_from_env())
        fields: Dict[str, Any] = {"solver": solver}
        if raw := os.getenv("CANM_GRID_OVERSAMPLING"):
            fields["grid_oversampling"] = int(raw)
        if raw := os.getenv("CANM_OUTPUT_DIR"):
            fields["output_dir"] = Path(raw)
        if raw := os.getenv("CANM_WORKERS"):
            fields["workers"] = int(raw)
        return Settings(**fields)
    except ValueError as exc:
        # pydantic's ValidationError is a ValueError too
        if isinstance(exc, ValidationError):
            raise SettingsError(f"Invalid application configuration: {exc}") from exc
        raise SettingsError(f"Invalid numeric value in CANM_* environment variables: {exc}") from exc


@lru_cache(maxsize=1)
def _cached_settings() -> Settings:
    return _build_settings()


def get_settings() -> Settings:
    """Retrieve cached application settings."""
    return _cached_settings()


def reset_settings_cache() -> None:
    """Clear the cached settings (primarily for tests)."""
    _cached_settings.cache_clear()


def merge_settings(base: Settings, overrides: Dict[str, Any]) -> Settings:
    """Overlay a (possibly partial) settings mapping; the solver block merges field by field."""

    payload = base.model_dump()
    for key, value in overrides.items():
        if key == "solver" and isinstance(value, dict):
            payload["solver"] = {**payload["solver"], **value}
        else:
            payload[key] = value
    try:
        return Settings.model_validate(payload)
    except ValidationError as exc:
        raise SettingsError(f"Invalid configuration override: {exc}") from exc


def load_settings_file(path: str | Path, *, base: Settings | None = None) -> Settings:
    """Overlay a JSON config file on top of the environment-derived settings."""

    config_path = Path(path)
    try:
        raw = json.loads(config_path.read_text())
    except FileNotFoundError as exc:
        raise SettingsError(f"Config file not found: {config_path}") from exc
    except json.JSONDecodeError as exc:
        raise SettingsError(f"Config file {config_path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SettingsError(f"Config file {config_path} must contain a JSON object")
    return merge_settings(base or get_settings(), raw)
