"""Content digests used to tie output files to the configuration that produced them."""

from __future__ import annotations

import hashlib
import hmac
import json
from typing import Any, Mapping


def canonical_json(payload: Mapping[str, Any]) -> bytes:
    """Key-sorted, whitespace-free JSON encoding."""

    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str).encode("utf-8")


def config_digest(payload: Mapping[str, Any]) -> str:
    """Return the sha256 digest of a configuration mapping, prefixed like ``sha256=...``."""

    digest = hashlib.sha256(canonical_json(payload)).hexdigest()
    return f"sha256={digest}"


def digest_matches(payload: Mapping[str, Any], recorded: str | None) -> bool:
    """Check a recorded digest using a constant-time comparison."""

    if not recorded:
        return False
    return hmac.compare_digest(config_digest(payload), recorded)
