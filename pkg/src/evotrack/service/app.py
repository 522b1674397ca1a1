"""HTTP surface: configure an engine, push ticks, query clusters and events.

One engine per process (single-writer); ticks are applied under a lock.
The CLI's streaming subcommands can run against this service instead of an
in-process engine.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException

from ..annotate import annotate_cluster
from ..config import EngineConfig
from ..engine import Engine, RunReport, TickResult
from ..errors import (
    CorruptSnapshot,
    EmptyEntitySet,
    EmptyEvent,
    EvotrackError,
    MalformedRecord,
    StaleTimestamp,
    VersionMismatch,
)
from ..ingest import RawRecord, parse_post
from ..snapshot import load_snapshot, read_header, save_snapshot
from ..track import classify_event
from .schemas import (
    AnnotationOut,
    ClusterOut,
    ConfigIn,
    EngineStatus,
    OpOut,
    SnapshotInfo,
    SnapshotRequest,
    TickRequest,
    TickResponse,
)


class _ServiceState:
    def __init__(self, engine: Engine):
        self.engine = engine
        self.report = RunReport(config=engine.config.to_dict())
        self.lock = threading.Lock()


def create_app(engine: Engine | None = None) -> FastAPI:
    app = FastAPI(title="evotrack", version="0.1.0")
    app.state.svc = _ServiceState(engine or Engine(EngineConfig()))

    def svc() -> _ServiceState:
        return app.state.svc

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/engine", response_model=EngineStatus)
    def engine_status() -> EngineStatus:
        state = svc()
        return _status(state.engine)

    @app.post("/engine", response_model=EngineStatus)
    def engine_reset(config: ConfigIn) -> EngineStatus:
        state = svc()
        with state.lock:
            try:
                new_engine = Engine(EngineConfig.from_dict(config.model_dump()))
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            app.state.svc = _ServiceState(new_engine)
        return _status(new_engine)

    @app.post("/ticks", response_model=TickResponse)
    def push_ticks(request: TickRequest) -> TickResponse:
        state = svc()
        engine = state.engine
        with state.lock:
            skipped = 0
            posts = []
            for record in request.records:
                try:
                    posts.append(
                        parse_post(
                            RawRecord.from_dict(record.model_dump()),
                            strict_entities=engine.config.strict_entities,
                        )
                    )
                except (MalformedRecord, EmptyEntitySet):
                    skipped += 1
            by_moment: dict[int, list] = {}
            for post in posts:
                moment = engine.moment_of(post)
                if engine.now is not None and moment <= engine.now:
                    skipped += 1
                    continue
                by_moment.setdefault(moment, []).append(post)
            if not by_moment and request.run_to is None:
                raise HTTPException(status_code=422, detail="no processable records")
            results: list[TickResult] = []
            try:
                if by_moment:
                    engine.ensure_started(min(by_moment))
                    for moment in sorted(by_moment):
                        while engine.now < moment - 1:
                            results.append(engine.tick([]))
                        results.append(engine.tick(by_moment[moment]))
                if request.run_to is not None:
                    if engine.now is None:
                        raise HTTPException(
                            status_code=422, detail="run_to on an unstarted engine"
                        )
                    while engine.now < request.run_to:
                        results.append(engine.tick([]))
            except StaleTimestamp as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            for result in results:
                state.report.add_row(result.stats)
            ops = [OpOut(**op.to_record()) for r in results for op in r.ops]
            return TickResponse(
                now=engine.now, ticks=len(results), ops=ops, skipped=skipped
            )

    @app.get("/clusters", response_model=list[ClusterOut])
    def clusters(events_only: bool = False) -> list[ClusterOut]:
        engine = svc().engine
        out = []
        for cid, cluster in sorted(engine.tracker.clusters.items()):
            size = len(cluster.members())
            is_event = classify_event(size, engine.config.phi)
            if events_only and not is_event:
                continue
            out.append(
                ClusterOut(
                    id=cid,
                    core=sorted(cluster.core),
                    border=sorted(cluster.border),
                    size=size,
                    is_event=is_event,
                    born_at=cluster.born_at,
                    lineage=cluster.lineage,
                )
            )
        return out

    @app.get("/clusters/{cluster_id}/annotation", response_model=AnnotationOut)
    def cluster_annotation(cluster_id: int, top_k: int | None = None) -> AnnotationOut:
        engine = svc().engine
        cluster = engine.tracker.clusters.get(cluster_id)
        if cluster is None:
            raise HTTPException(status_code=404, detail=f"no cluster {cluster_id}")
        try:
            entries = annotate_cluster(
                engine.net,
                cluster.members(),
                engine.now,
                top_k=top_k or engine.config.top_k,
            )
        except EmptyEvent as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return AnnotationOut(cluster_id=cluster_id, entries=entries)

    @app.get("/report")
    def report() -> dict:
        return svc().report.to_dict()

    @app.post("/snapshot/save", response_model=SnapshotInfo)
    def snapshot_save(request: SnapshotRequest) -> SnapshotInfo:
        state = svc()
        with state.lock:
            try:
                save_snapshot(state.engine, request.path)
            except OSError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SnapshotInfo(path=request.path, header=read_header(request.path))

    @app.post("/snapshot/load", response_model=EngineStatus)
    def snapshot_load(request: SnapshotRequest) -> EngineStatus:
        state = svc()
        with state.lock:
            try:
                engine = load_snapshot(request.path)
            except (CorruptSnapshot, VersionMismatch, OSError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            app.state.svc = _ServiceState(engine)
        return _status(engine)

    @app.exception_handler(EvotrackError)
    def engine_error(_, exc: EvotrackError):  # pragma: no cover - safety net
        raise HTTPException(status_code=500, detail=f"{type(exc).__name__}: {exc}")

    return app


def _status(engine: Engine) -> EngineStatus:
    tracker = engine.tracker
    return EngineStatus(
        started=engine.now is not None,
        now=engine.now,
        num_posts=len(engine.net),
        num_core=engine.sketch.num_core(),
        num_components=engine.sketch.num_components(),
        num_clusters=len(tracker.clusters),
        num_events=len(tracker.events()),
        config=engine.config.to_dict(),
    )
