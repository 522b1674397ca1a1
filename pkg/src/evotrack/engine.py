"""Tick orchestration: window delta, delta sets, sketch update, op emission.

A tick advances the window one moment (more in benchmark sweeps): outgoing
posts are removed first, incoming posts are linkage-previewed, the delta
sets over the overlap are classified, the network gains the new posts, the
sketch is updated deletions-first, and the tracker turns component events
into evolution ops.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .annotate import annotate_cluster
from .config import EngineConfig
from .errors import EmptyEvent, StaleTimestamp
from .ingest import Post
from .postnet import PostNetwork, WindowDelta
from .sketch import DeltaSets, SketchGraph, is_core_weight
from .track import ClusterTracker, EvolutionOp

__all__ = ["Engine", "TickResult", "TickTrace", "RunReport", "StreamRunner"]


@dataclass(frozen=True)
class TickTrace:
    """Intermediate tick state exposed for equivalence testing."""

    delta: WindowDelta
    delta_sets: DeltaSets
    expired_cores: frozenset[str]
    new_core_ids: frozenset[str]
    cores_before: frozenset[str]


@dataclass(frozen=True)
class TickResult:
    t: int
    ops: list[EvolutionOp]
    stats: dict
    trace: TickTrace | None = None


@dataclass
class RunReport:
    """Per-tick counters plus stream-level totals."""

    config: dict
    rows: list[dict] = field(default_factory=list)
    skipped_malformed: int = 0
    skipped_empty: int = 0
    skipped_stale: int = 0

    def add_row(self, row: dict) -> None:
        self.rows.append(row)

    def to_dict(self) -> dict:
        ops_total: dict[str, int] = {}
        for row in self.rows:
            for kind, count in row["ops"].items():
                ops_total[kind] = ops_total.get(kind, 0) + count
        return {
            "config": self.config,
            "ticks": len(self.rows),
            "posts_in": sum(r["posts_in"] for r in self.rows),
            "posts_out": sum(r["posts_out"] for r in self.rows),
            "ops_total": ops_total,
            "skipped_malformed": self.skipped_malformed,
            "skipped_empty": self.skipped_empty,
            "skipped_stale": self.skipped_stale,
            "rows": self.rows,
        }


class Engine:
    """One tracking pipeline: post network + sketch + cluster tracker."""

    STATE_VERSION = 1

    def __init__(self, config: EngineConfig):
        self.config = config
        self.params = config.similarity_params()
        self.net = PostNetwork(self.params, config.window_config())
        self.sketch = SketchGraph(self.params)
        self.tracker = ClusterTracker(phi=config.phi)

    # ------------------------------------------------------------------ #

    @property
    def now(self) -> int | None:
        return self.net.now

    def ensure_started(self, first_moment: int) -> None:
        if self.net.now is None:
            self.net.start_at(first_moment - 1)

    def moment_of(self, post: Post) -> int:
        return self.net.moment_of_timestamp(post.timestamp)

    def tick(self, posts: list[Post], steps: int = 1, want_trace: bool = False) -> TickResult:
        """Advance the window ``steps`` moments, absorbing ``posts``."""
        started = time.perf_counter()
        net, sketch, tracker = self.net, self.sketch, self.tracker
        delta = net.advance_window(posts, steps=steps)
        t_next = delta.to_moment
        cores_before = frozenset(sketch.cores) if want_trace else frozenset()

        # Deletions first: expire the outgoing posts.
        expired_cores = {pid for pid in delta.old_ids if pid in sketch.cores}
        pre_seeds: set[str] = set()
        removal_touched: set[str] = set()
        for pid in delta.old_ids:
            pre_seeds.update(net.adj[pid])
            removal_touched.update(net.remove_post(pid))
        old_set = delta.old_set
        pre_seeds -= old_set
        removal_touched -= old_set

        # Preview linkage for the incoming batch against the overlap.
        new_posts = list(delta.new_posts)
        preview = net.bulk_linkage(new_posts)
        new_ids = {p.id for p in new_posts}
        add_contrib: dict[str, float] = {}
        for post in new_posts:
            for nbr, w in preview[post.id].items():
                if nbr not in new_ids:
                    add_contrib[nbr] = add_contrib.get(nbr, 0.0) + w

        delta_sets = sketch.compute_delta_sets(net, delta, removal_touched, add_contrib)

        # Materialize the incoming subgraph.
        add_touched: set[str] = set()
        for post in new_posts:
            add_touched |= net.add_post(post, edges=preview[post.id])
        new_core_ids = {
            p.id
            for p in new_posts
            if is_core_weight(net.sums[p.id], t_next - p.moment, self.params, net.decay_table)
        }

        events = sketch.apply_delta(net, expired_cores, delta_sets, new_core_ids)

        changed = (
            new_ids
            | delta_sets.promoted
            | delta_sets.demoted_removal
            | delta_sets.demoted_decay
        )
        for pid in sorted((removal_touched | add_touched | changed) & sketch.cores):
            sketch.refresh_expiry(net, pid)

        border_seeds = set(pre_seeds)
        for pid in changed:
            if pid in net.posts:
                border_seeds.add(pid)
                border_seeds.update(net.adj[pid])

        ops = tracker.apply_tick(sketch, net, events, border_seeds, t_next)
        net.now = t_next
        if self.config.annotate_ops:
            ops = [self._annotated(op, t_next) for op in ops]

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        stats = {
            "t": t_next,
            "posts_in": len(new_posts),
            "posts_out": len(delta.old_ids),
            "num_posts": len(net),
            "num_core": sketch.num_core(),
            "num_core_edges": sketch.num_core_edges(),
            "num_components": sketch.num_components(),
            "num_events": len(tracker.events()),
            "ops": _ops_by_kind(ops),
            "wall_ms": elapsed_ms,
        }
        trace = (
            TickTrace(
                delta=delta,
                delta_sets=delta_sets,
                expired_cores=frozenset(expired_cores),
                new_core_ids=frozenset(new_core_ids),
                cores_before=cores_before,
            )
            if want_trace
            else None
        )
        return TickResult(t=t_next, ops=ops, stats=stats, trace=trace)

    def _annotated(self, op: EvolutionOp, t: int) -> EvolutionOp:
        if not op.result_ids:
            return op
        members: set[str] = set()
        for rid in op.result_ids:
            cluster = self.tracker.clusters.get(rid)
            if cluster is not None:
                members |= cluster.members()
        try:
            ranked = annotate_cluster(self.net, members, t, top_k=self.config.top_k)
        except EmptyEvent:
            return op
        return replace(op, annotation=tuple((e, s) for e, s in ranked))

    # ------------------------------------------------------------------ #
    # state

    def state_dict(self) -> dict:
        return {
            "version": self.STATE_VERSION,
            "config": self.config.to_dict(),
            "network": self.net.state_dict(),
            "sketch": self.sketch.state_dict(),
            "tracker": self.tracker.state_dict(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "Engine":
        config = EngineConfig.from_dict(state["config"])
        engine = cls(config)
        engine.net = PostNetwork.from_state(state["network"])
        engine.params = engine.net.params
        engine.sketch = SketchGraph.from_state(state["sketch"], engine.params, engine.net)
        engine.tracker = ClusterTracker.from_state(state["tracker"])
        return engine


def _ops_by_kind(ops: list[EvolutionOp]) -> dict[str, int]:
    out: dict[str, int] = {}
    for op in ops:
        out[op.kind] = out.get(op.kind, 0) + 1
    return out


class StreamRunner:
    """Feeds a moment-ordered post stream into an engine, tick by tick.

    Posts must arrive in non-decreasing moment order; gaps become empty
    ticks, stale posts are skipped and counted.
    """

    def __init__(self, engine: Engine, report: RunReport | None = None):
        self.engine = engine
        self.report = report or RunReport(config=engine.config.to_dict())
        self._pending: list[Post] = []
        self._pending_moment: int | None = None

    def push(self, post: Post) -> list[TickResult]:
        moment = self.engine.moment_of(post)
        self.engine.ensure_started(moment)
        now = self.engine.now
        if moment <= now or (
            self._pending_moment is not None and moment < self._pending_moment
        ):
            self.report.skipped_stale += 1
            return []
        results: list[TickResult] = []
        if self._pending_moment is None:
            self._pending_moment = moment
        elif moment > self._pending_moment:
            results.extend(self._flush())
            self._pending_moment = moment
        self._pending.append(post)
        return results

    def _flush(self) -> list[TickResult]:
        results = []
        target = self._pending_moment
        assert target is not None
        while self.engine.now < target - 1:
            results.append(self._tick([]))
        results.append(self._tick(self._pending))
        self._pending = []
        self._pending_moment = None
        return results

    def _tick(self, posts: list[Post]) -> TickResult:
        result = self.engine.tick(posts)
        self.report.add_row(result.stats)
        return result

    def finish(self) -> list[TickResult]:
        if self._pending_moment is None:
            return []
        return self._flush()

    def run_to(self, moment: int) -> list[TickResult]:
        """Advance with empty ticks until ``moment`` (inclusive)."""
        results = list(self.finish())
        if self.engine.now is None:
            raise StaleTimestamp("cannot advance an unstarted engine")
        while self.engine.now < moment:
            results.append(self._tick([]))
        return results
