"""Request/response models for the tracking service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class ConfigIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window_len: int = 10
    tick_unit: int = 1
    decay: str = "reciprocal"
    eps0: float = 0.2
    eps1: float = 0.5
    delta1: float = 0.5
    phi: int = 10
    top_k: int = 20
    strict_entities: bool = False
    annotate_ops: bool = True


class RecordIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    timestamp: int
    author: str = ""
    entities: list[str] | None = None
    text: str | None = None


class OpOut(BaseModel):
    t: int
    kind: str
    ids: list[int]
    result_ids: list[int]
    added: list[str]
    removed: list[str]
    size_before: int
    size_after: int
    is_event_before: bool
    is_event_after: bool
    lineage: dict | None = None
    annotation: list[tuple[str, float]] | None = None


class TickRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    records: list[RecordIn]
    # Advance through empty moments up to this one even without records.
    run_to: int | None = None


class TickResponse(BaseModel):
    now: int
    ticks: int
    ops: list[OpOut]
    skipped: int


class ClusterOut(BaseModel):
    id: int
    core: list[str]
    border: list[str]
    size: int
    is_event: bool
    born_at: int
    lineage: dict | None = None


class AnnotationOut(BaseModel):
    cluster_id: int
    entries: list[tuple[str, float]]


class EngineStatus(BaseModel):
    started: bool
    now: int | None
    num_posts: int
    num_core: int
    num_components: int
    num_clusters: int
    num_events: int
    config: dict


class SnapshotRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str


class SnapshotInfo(BaseModel):
    path: str
    header: dict


class ErrorOut(BaseModel):
    detail: str = Field(description="human-readable error")
