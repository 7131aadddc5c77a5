"""Scenario files: the JSON inputs of the certify, recover and doa commands."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.models.arrays import IndexSet
from src.models.signal import SourceModel
from src.models.solver import SolverConfig
from src.services.geometry import cantor_array, difference_set, ula
from src.utils.paths import SCENARIOS_DIR


class ScenarioError(RuntimeError):
    """Raised when a scenario file is missing, malformed or inconsistent."""


class ArraySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["cantor", "explicit", "ula"]
    order: int | None = Field(default=None, ge=1)
    indices: List[int] | None = None
    n: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_parameters(self) -> "ArraySpec":
        if self.type == "cantor" and self.order is None:
            raise ValueError("a cantor array needs 'order'")
        if self.type == "explicit" and not self.indices:
            raise ValueError("an explicit array needs a non-empty 'indices' list")
        if self.type == "ula" and self.n is None:
            raise ValueError("a ula array needs 'n'")
        return self

    def build(self) -> IndexSet:
        if self.type == "cantor":
            return cantor_array(self.order)
        if self.type == "ula":
            return ula(self.n)
        values = sorted(set(self.indices))
        if values[0] < 0:
            raise ValueError("array indices must be nonnegative")
        return IndexSet(tuple(values), values[-1] + 1)


class Scenario(BaseModel):
    """Sources, geometry, measurement and solver overrides for one run."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    taus: List[float]
    powers: List[float] | None = None
    array: ArraySpec | None = None
    n: int | None = Field(default=None, ge=1)
    omega: Literal["coarray", "full"] | List[int] = "coarray"
    compression: Literal["identity", "coarray"] | List[int] = "coarray"
    mode: Literal["exact", "denoise"] = "exact"
    L: int | None = Field(default=None, ge=1)
    snr_db: float | None = None
    lam: float | None = Field(default=None, alias="lambda", ge=0)
    seed: int | None = None
    grid: int | None = Field(default=None, ge=4)
    solver: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        if self.powers is not None and len(self.powers) != len(self.taus):
            raise ValueError("'powers' must have one entry per source")
        if self.array is None and self.n is None:
            raise ValueError("either 'array' or 'n' must be given")
        if self.array is None and (self.omega == "coarray" or self.compression == "coarray"):
            raise ValueError("'coarray' omega or compression requires an 'array'")
        return self

    def index_array(self) -> IndexSet:
        if self.array is None:
            return IndexSet.full(self.n)
        return self.array.build()

    def aperture(self) -> int:
        if self.array is None:
            return self.n
        return self.index_array().ambient

    def omega_set(self) -> IndexSet:
        n = self.aperture()
        if self.omega == "full":
            return IndexSet.full(n)
        if self.omega == "coarray":
            return difference_set(self.index_array())
        return IndexSet.from_iterable(self.omega, n)

    def compression_set(self, override: str | None = None) -> IndexSet:
        choice = override or self.compression
        n = self.aperture()
        if choice == "identity":
            return IndexSet.full(n)
        if choice == "coarray":
            return self.index_array()
        return IndexSet.from_iterable(choice, n)

    def source_model(self) -> SourceModel:
        powers = self.powers if self.powers is not None else [1.0] * len(self.taus)
        return SourceModel(taus=self.taus, powers=powers, aperture=self.aperture())

    def solver_config(self, base: SolverConfig) -> SolverConfig:
        return base.with_overrides(**self.solver) if self.solver else base


def resolve_scenario_path(path: str | Path) -> Path:
    """A path as given, or a bare name such as ``cantor4_exact`` from the bundled scenarios."""

    candidate = Path(path)
    if candidate.exists() or candidate.parent != Path("."):
        return candidate
    bundled = SCENARIOS_DIR / (candidate.name if candidate.suffix else f"{candidate.name}.json")
    return bundled if bundled.exists() else candidate


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file; every failure surfaces as ScenarioError."""

    scenario_path = resolve_scenario_path(path)
    try:
        raw = json.loads(scenario_path.read_text())
    except FileNotFoundError as exc:
        raise ScenarioError(f"Scenario file not found: {scenario_path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"Scenario file {scenario_path} is not valid JSON: {exc}") from exc
    try:
        scenario = Scenario.model_validate(raw)
        # geometry and sources are validated eagerly so schema errors surface here
        scenario.source_model()
        scenario.omega_set()
        scenario.compression_set()
        scenario.solver_config(SolverConfig())
    except (ValidationError, ValueError, OverflowError) as exc:
        raise ScenarioError(f"Invalid scenario {scenario_path}: {exc}") from exc
    return scenario
