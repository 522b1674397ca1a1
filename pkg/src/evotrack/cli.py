"""Command-line entry points.

Streaming subcommands run an in-process engine by default; ``track`` can
also act as a thin client against a running service (``--server``). All op
output is line-delimited JSON on stdout; the run report goes to stderr or
``--report``.

Exit codes: 0 success, 1 usage or config error, 2 input error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EngineConfig
from .engine import Engine, RunReport, StreamRunner
from .errors import (
    CorruptSnapshot,
    EvotrackError,
    InvalidScript,
    VersionMismatch,
)
from .evaluation.baselines import baseline_match
from .evaluation.experiments import deletion_order_study, speedup_sweep
from .evaluation.oracle import oracle_tick
from .evaluation.synth import (
    DieDirective,
    MergeDirective,
    PlantedCluster,
    ScenarioScript,
    SplitDirective,
    generate,
    records_to_lines,
)
from .ingest import StreamStats, iter_records
from .snapshot import load_snapshot, read_header, save_snapshot

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("engine config (overrides --config)")
    group.add_argument("--config", type=Path, help="JSON config file")
    group.add_argument("--window-len", type=int)
    group.add_argument("--tick-unit", type=int)
    group.add_argument("--decay", choices=["reciprocal", "exponential", "none"])
    group.add_argument("--eps0", type=float)
    group.add_argument("--eps1", type=float)
    group.add_argument("--delta1", type=float)
    group.add_argument("--phi", type=int)
    group.add_argument("--top-k", type=int)
    group.add_argument("--strict-entities", action="store_true", default=None)
    group.add_argument(
        "--no-annotate", action="store_true", help="omit annotations from op records"
    )


def _config_from_args(args) -> EngineConfig:
    config = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    overrides = dict(
        window_len=args.window_len,
        tick_unit=args.tick_unit,
        decay=args.decay,
        eps0=args.eps0,
        eps1=args.eps1,
        delta1=args.delta1,
        phi=args.phi,
        top_k=args.top_k,
        strict_entities=args.strict_entities,
    )
    if getattr(args, "no_annotate", False):
        overrides["annotate_ops"] = False
    return config.with_overrides(**overrides)


def _open_input(path: str | None):
    if path in (None, "-"):
        return sys.stdin
    return open(path, "r", encoding="utf-8")


def _write_report(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)


# --------------------------------------------------------------------------- #
# track


def _cmd_track(args) -> int:
    if args.server:
        return _track_remote(args)
    if args.resume:
        engine = load_snapshot(args.resume)
    else:
        engine = Engine(_config_from_args(args))
    runner = StreamRunner(engine)
    stats = StreamStats()
    out = sys.stdout

    def emit(results) -> None:
        for result in results:
            for op in result.ops:
                out.write(_dump(op.to_record()) + "\n")
            if (
                engine.config.snapshot_interval
                and engine.config.snapshot_path
                and result.t % engine.config.snapshot_interval == 0
            ):
                save_snapshot(engine, engine.config.snapshot_path)

    with _open_input(args.input) as fh:
        for post in iter_records(
            fh, stats=stats, strict_entities=engine.config.strict_entities
        ):
            emit(runner.push(post))
    emit(runner.finish())
    if args.run_to is not None and engine.now is not None:
        emit(runner.run_to(args.run_to))
    if args.snapshot:
        save_snapshot(engine, args.snapshot)
    runner.report.skipped_malformed = stats.skipped_malformed
    runner.report.skipped_empty = stats.skipped_empty
    _write_report(runner.report.to_dict(), args.report)
    return EXIT_OK


def _track_remote(args) -> int:
    import httpx

    base = args.server.rstrip("/")
    stats = StreamStats()
    config = _config_from_args(args)
    with httpx.Client(base_url=base, timeout=60.0) as client:
        client.post("/engine", json=_service_config(config)).raise_for_status()
        pending: list[dict] = []
        pending_moment: int | None = None

        def send(records: list[dict], run_to: int | None = None) -> None:
            if not records and run_to is None:
                return
            response = client.post(
                "/ticks", json={"records": records, "run_to": run_to}
            )
            response.raise_for_status()
            for op in response.json()["ops"]:
                print(_dump(op))

        with _open_input(args.input) as fh:
            for post in iter_records(fh, stats=stats, strict_entities=config.strict_entities):
                moment = post.timestamp // config.tick_unit
                if pending_moment is not None and moment > pending_moment:
                    send(pending)
                    pending = []
                pending_moment = moment
                pending.append(
                    {
                        "id": post.id,
                        "timestamp": post.timestamp,
                        "author": post.author,
                        "entities": sorted(post.entities),
                    }
                )
        send(pending, run_to=args.run_to)
        report = client.get("/report")
        report.raise_for_status()
        payload = report.json()
        payload["skipped_malformed"] = stats.skipped_malformed
        payload["skipped_empty"] = stats.skipped_empty
        _write_report(payload, args.report)
    return EXIT_OK


def _service_config(config: EngineConfig) -> dict:
    payload = config.to_dict()
    payload.pop("snapshot_path", None)
    payload.pop("snapshot_interval", None)
    return payload


# --------------------------------------------------------------------------- #
# oracle


def _cmd_oracle(args) -> int:
    import time as _time

    config = _config_from_args(args)
    params = config.similarity_params()
    stats = StreamStats()
    by_moment: dict[int, list] = {}
    with _open_input(args.input) as fh:
        for post in iter_records(fh, stats=stats, strict_entities=config.strict_entities):
            moment = post.timestamp // config.tick_unit
            by_moment.setdefault(moment, []).append(post.at_moment(moment))
    if not by_moment:
        _write_report({"ticks": 0, "config": config.to_dict()}, args.report)
        return EXIT_OK
    first, last = min(by_moment), max(by_moment)
    snapshots = []
    rows = []
    for moment in range(first, last + 1):
        in_window = [
            p
            for mm in range(moment - config.window_len + 1, moment + 1)
            for p in by_moment.get(mm, [])
        ]
        started = _time.perf_counter()
        clusters = oracle_tick(in_window, moment, params)
        wall_ms = (_time.perf_counter() - started) * 1000.0
        snapshots.append((moment, [c.members() for c in clusters]))
        rows.append(
            {
                "t": moment,
                "num_posts": len(in_window),
                "num_clusters": len(clusters),
                "num_events": sum(
                    1 for c in clusters if len(c.members()) >= config.phi
                ),
                "wall_ms": wall_ms,
            }
        )
    for op in baseline_match(snapshots, kappa=args.kappa, phi=config.phi):
        print(_dump(op.to_record()))
    _write_report(
        {"config": config.to_dict(), "kappa": args.kappa, "ticks": len(rows), "rows": rows},
        args.report,
    )
    return EXIT_OK


# --------------------------------------------------------------------------- #
# bench


def _cmd_bench(args) -> int:
    if args.ordering:
        result = deletion_order_study(seed=args.seed, ticks=args.ticks)
        print(
            _dump(
                {
                    "study": "deletion_order",
                    "ticks": result["ticks"],
                    "mean_deletions_first": result["mean_deletions_first"],
                    "mean_interleaved": result["mean_interleaved"],
                }
            )
        )
        return EXIT_OK
    steps = tuple(int(s) for s in args.steps.split(","))
    rows = speedup_sweep(
        posts_per_moment=args.posts_per_moment,
        window_len=args.window_len,
        steps_list=steps,
        measured_ticks=args.ticks,
        seed=args.seed,
    )
    for row in rows:
        print(_dump({"study": "speedup", **row}))
    print(
        "step/window sweep: "
        + ", ".join(f"{r['step_over_window']:.1f}->{r['ratio']:.2f}" for r in rows),
        file=sys.stderr,
    )
    return EXIT_OK


# --------------------------------------------------------------------------- #
# synth


_PRESETS = {
    "basic": lambda seed: ScenarioScript(
        seed=seed,
        moments=12,
        window_len=5,
        clusters=(PlantedCluster("alpha", start=1, end=8, posts_per_moment=4),),
        noise_per_moment=2,
    ),
    "merge-split": lambda seed: ScenarioScript(
        seed=seed,
        moments=24,
        window_len=5,
        clusters=(
            PlantedCluster("alpha", start=1, end=22, posts_per_moment=4),
            PlantedCluster("beta", start=2, end=22, posts_per_moment=4),
        ),
        merges=(MergeDirective("alpha", "beta", at=6, bridge_posts=2),),
        splits=(SplitDirective("alpha", at=14),),
        noise_per_moment=2,
    ),
}


def _script_from_json(data: dict) -> ScenarioScript:
    try:
        return ScenarioScript(
            seed=data["seed"],
            moments=data["moments"],
            window_len=data["window_len"],
            clusters=tuple(PlantedCluster(**c) for c in data.get("clusters", [])),
            merges=tuple(MergeDirective(**m) for m in data.get("merges", [])),
            splits=tuple(SplitDirective(**s) for s in data.get("splits", [])),
            deaths=tuple(DieDirective(**d) for d in data.get("deaths", [])),
            noise_per_moment=data.get("noise_per_moment", 0),
            noise_rate=data.get("noise_rate", 0.0),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidScript(f"bad scenario file: {exc}") from exc


def _cmd_synth(args) -> int:
    if args.scenario:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            script = _script_from_json(json.load(fh))
    else:
        script = _PRESETS[args.preset](args.seed)
    records, truth = generate(script)
    lines = records_to_lines(records)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        for line in lines:
            print(line)
    if args.truth:
        Path(args.truth).write_text(
            "\n".join(_dump(t) for t in truth) + "\n", encoding="utf-8"
        )
    return EXIT_OK


# --------------------------------------------------------------------------- #
# snapshots / annotations


def _cmd_annotate_dump(args) -> int:
    from .annotate import annotate_cluster
    from .errors import EmptyEvent
    from .track import classify_event

    engine = load_snapshot(args.snapshot)
    for cid, cluster in sorted(engine.tracker.clusters.items()):
        members = cluster.members()
        try:
            entries = annotate_cluster(
                engine.net, members, engine.now, top_k=args.top_k
            )
        except EmptyEvent:
            entries = []
        print(
            _dump(
                {
                    "cluster_id": cid,
                    "size": len(members),
                    "is_event": classify_event(len(members), engine.config.phi),
                    "annotation": [[e, s] for e, s in entries],
                }
            )
        )
    return EXIT_OK


def _cmd_snapshot(args) -> int:
    print(json.dumps(read_header(args.path), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = load_snapshot(args.resume) if args.resume else Engine(_config_from_args(args))
    uvicorn.run(create_app(engine), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# --------------------------------------------------------------------------- #


def build_parser() -> _Parser:
    parser = _Parser(prog="evotrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the incremental tracker over a stream")
    p_track.add_argument("--input", "-i", help="NDJSON records file, - for stdin")
    p_track.add_argument("--report", help="write the run report to this path")
    p_track.add_argument("--run-to", type=int, help="advance empty ticks up to this moment")
    p_track.add_argument("--snapshot", help="save a snapshot after the run")
    p_track.add_argument("--resume", help="resume from a snapshot (ignores config flags)")
    p_track.add_argument("--server", help="run against a service instead of in-process")
    _add_config_flags(p_track)
    p_track.set_defaults(func=_cmd_track)

    p_oracle = sub.add_parser(
        "oracle", help="from-scratch recomputation per moment plus snapshot matching"
    )
    p_oracle.add_argument("--input", "-i")
    p_oracle.add_argument("--report")
    p_oracle.add_argument("--kappa", type=float, default=0.9)
    _add_config_flags(p_oracle)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_bench = sub.add_parser("bench", help="incremental-vs-scratch timing studies")
    p_bench.add_argument("--ordering", action="store_true", help="update ordering study")
    p_bench.add_argument("--posts-per-moment", type=int, default=2000)
    p_bench.add_argument("--window-len", type=int, default=10)
    p_bench.add_argument("--steps", default="1,2,4")
    p_bench.add_argument("--ticks", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=7)
    p_bench.set_defaults(func=_cmd_bench)

    p_synth = sub.add_parser("synth", help="generate a planted-scenario stream")
    p_synth.add_argument("--scenario", help="scenario JSON file")
    p_synth.add_argument("--preset", choices=sorted(_PRESETS), default="basic")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", help="records path (default stdout)")
    p_synth.add_argument("--truth", help="write ground-truth ops here")
    p_synth.set_defaults(func=_cmd_synth)

    p_ann = sub.add_parser("annotate-dump", help="annotations of a snapshot's clusters")
    p_ann.add_argument("--snapshot", required=True)
    p_ann.add_argument("--top-k", type=int, default=20)
    p_ann.set_defaults(func=_cmd_annotate_dump)

    p_snap = sub.add_parser("snapshot", help="inspect a snapshot file")
    snap_sub = p_snap.add_subparsers(dest="snapshot_command", required=True)
    p_info = snap_sub.add_parser("info", help="validate and summarize")
    p_info.add_argument("path")
    p_info.set_defaults(func=_cmd_snapshot)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8321)
    p_serve.add_argument("--resume", help="start from a snapshot")
    _add_config_flags(p_serve)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, InvalidScript, VersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CorruptSnapshot, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EvotrackError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
