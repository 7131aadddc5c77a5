from __future__ import annotations

import numpy as np
import pytest

from src.config import reset_settings_cache


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    for name in (
        "CANM_RHO",
        "CANM_ALPHA",
        "CANM_EPS_ABS",
        "CANM_EPS_REL",
        "CANM_MAX_ITERS",
        "CANM_ADAPT_RHO",
        "CANM_GRID_OVERSAMPLING",
        "CANM_OUTPUT_DIR",
        "CANM_WORKERS",
    ):
        monkeypatch.delenv(name, raising=False)
    reset_settings_cache()
    yield
    reset_settings_cache()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)

