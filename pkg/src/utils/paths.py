"""Shared filesystem paths used across the application."""

from __future__ import annotations

from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent
PROJECT_DIR = BASE_DIR.parent
SCENARIOS_DIR = PROJECT_DIR / "scenarios"


def ensure_output_dir(path: str | Path) -> Path:
    """Create ``path`` (and parents) if needed and return it resolved."""

    target = Path(path).expanduser().resolve()
    target.mkdir(parents=True, exist_ok=True)
    return target
