from __future__ import annotations

import json
import subprocess
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

from pydantic import BaseModel, Field

from src import __version__
from src.config import Settings
from src.logger import get_logger
from src.utils.digest import config_digest, digest_matches

logger = get_logger()

MANIFEST_FILENAME = "manifest.json"


class ManifestError(RuntimeError):
    """Raised when a manifest no longer matches the digest it was built with."""


class RunManifest(BaseModel):
    """Provenance record written next to every set of CLI outputs."""

    command: str
    config_path: str | None = None
    config: Dict[str, Any]
    config_digest: str
    seed: int | None = None
    version: str
    started_at: datetime
    finished_at: datetime | None = None
    outputs: List[str] = Field(default_factory=list)

    def reference(self) -> Dict[str, str]:
        """Fields embedded in each JSON output so it points back at its manifest."""
        return {"manifest": MANIFEST_FILENAME, "config_digest": self.config_digest}


def describe_version() -> str:
    """``git describe`` of the working tree, or the package version outside a checkout."""

    try:
        completed = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).resolve().parent,
            check=True,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    described = completed.stdout.strip()
    return described or __version__


def build_run_manifest(
    command: str,
    settings: Settings,
    *,
    config_path: str | Path | None = None,
    seed: int | None = None,
    extra: Dict[str, Any] | None = None,
) -> RunManifest:
    """Snapshot the resolved configuration (settings plus any scenario payload)."""

    resolved: Dict[str, Any] = {"settings": settings.model_dump(mode="json")}
    if extra:
        resolved.update(extra)
    return RunManifest(
        command=command,
        config_path=str(config_path) if config_path is not None else None,
        config=resolved,
        config_digest=config_digest(resolved),
        seed=seed,
        version=describe_version(),
        started_at=datetime.now(timezone.utc),
    )


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    """Stamp the finish time and write the manifest; refuses a configuration edited after digesting."""

    if not digest_matches(manifest.config, manifest.config_digest):
        raise ManifestError(f"Configuration changed after it was digested ({manifest.config_digest})")
    manifest.finished_at = datetime.now(timezone.utc)
    path = out_dir / MANIFEST_FILENAME
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n")
    logger.debug(f"Wrote run manifest to {path}")
    return path
