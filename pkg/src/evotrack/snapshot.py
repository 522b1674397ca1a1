"""Engine state persistence: versioned flat file with corruption detection."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .engine import Engine
from .errors import CorruptSnapshot, VersionMismatch

__all__ = ["save_snapshot", "load_snapshot", "read_header"]

MAGIC = "evotrack-snapshot"


def _digest(state: dict) -> str:
    canonical = json.dumps(state, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_snapshot(engine: Engine, path: str | Path) -> None:
    """Write the engine's full observable state; call between ticks."""
    state = engine.state_dict()
    document = {
        "magic": MAGIC,
        "version": Engine.STATE_VERSION,
        "checksum": _digest(state),
        "state": state,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, separators=(",", ":"))
        fh.write("\n")


def _read_document(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptSnapshot(f"unparseable snapshot {path}: {exc}") from exc
    if not isinstance(document, dict) or document.get("magic") != MAGIC:
        raise CorruptSnapshot(f"{path} is not an engine snapshot")
    if document.get("version") != Engine.STATE_VERSION:
        raise VersionMismatch(
            f"snapshot version {document.get('version')} != {Engine.STATE_VERSION}"
        )
    state = document.get("state")
    if not isinstance(state, dict) or _digest(state) != document.get("checksum"):
        raise CorruptSnapshot(f"checksum mismatch in {path}")
    return document


def read_header(path: str | Path) -> dict:
    """Validate a snapshot and return summary metadata."""
    document = _read_document(path)
    state = document["state"]
    return {
        "version": document["version"],
        "now": state["network"]["now"],
        "num_posts": len(state["network"]["nodes"]),
        "num_edges": len(state["network"]["edges"]),
        "num_core": len(state["sketch"]["cores"]),
        "num_clusters": len(state["tracker"]["clusters"]),
        "config": state["config"],
    }


def load_snapshot(path: str | Path) -> Engine:
    """Rebuild an engine from a snapshot written by the same major version."""
    document = _read_document(path)
    return Engine.from_state(document["state"])
