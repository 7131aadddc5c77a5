"""Data models for trial jobs run on the worker pool."""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict

from pydantic import BaseModel, Field


class TrialJob(BaseModel):
    """One seeded unit of work (a benchmark cell, a DOA run, ...)."""

    trial_id: int = Field(ge=0)
    seed: int | None = None
    params: Dict[str, Any] = Field(default_factory=dict)
    submitted_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class TrialResult(BaseModel):
    trial_id: int
    seed: int | None = None
    ok: bool
    value: Dict[str, Any] = Field(default_factory=dict)
    error: str | None = None
    duration_seconds: float = 0.0
    finished_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
