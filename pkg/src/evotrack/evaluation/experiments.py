"""Measured studies: update ordering cost, incremental speedup, density sweep."""

from __future__ import annotations

import random
import statistics
import time
from collections import deque

from ..config import EngineConfig
from ..engine import Engine
from ..ingest import Post
from ..similarity import DecayKind, DecayTable, SimilarityParams, quantize_weight
from .baselines import baseline_match
from .oracle import oracle_tick, reference_edges

__all__ = [
    "deletion_order_study",
    "speedup_sweep",
    "density_sweep",
    "density_fixture",
    "bench_stream",
]


# --------------------------------------------------------------------------- #
# ordering study: deletions-first vs interleaved single-post updates


class _StepSimulator:
    """Single-post add/remove over a fixed post universe, from-scratch style.

    Pairwise weights come from the independent reference kernel; membership
    and sums are tracked per step so cluster partitions can be diffed after
    every primitive update.
    """

    def __init__(self, universe: list[Post], params: SimilarityParams):
        self.params = params
        self.table = DecayTable(params.decay)
        self.posts = {p.id: p for p in universe}
        self.adj = reference_edges(universe, params)
        self.present: set[str] = set()
        self.sums: dict[str, float] = {}

    def add(self, pid: str) -> None:
        total = 0.0
        for nbr in sorted(self.adj[pid]):
            if nbr in self.present:
                w = self.adj[pid][nbr]
                self.sums[nbr] += w
                total += w
        self.present.add(pid)
        self.sums[pid] = total

    def remove(self, pid: str) -> None:
        self.present.discard(pid)
        del self.sums[pid]
        for nbr in self.adj[pid]:
            if nbr in self.present:
                self.sums[nbr] -= self.adj[pid][nbr]

    def partition(self, t: int) -> list[frozenset[str]]:
        """Connected core components at moment ``t``."""
        params, table = self.params, self.table
        cores = set()
        for pid in self.present:
            gap = t - self.posts[pid].moment
            if quantize_weight(self.sums[pid] / table.value(gap)) >= params.delta1:
                cores.add(pid)
        out = []
        seen: set[str] = set()
        for seed in sorted(cores):
            if seed in seen:
                continue
            comp = {seed}
            queue = deque([seed])
            while queue:
                node = queue.popleft()
                for nbr, w in self.adj[node].items():
                    if nbr in cores and nbr not in comp and w >= params.eps1:
                        comp.add(nbr)
                        queue.append(nbr)
            seen |= comp
            out.append(frozenset(comp))
        return out


def _partition_ops(before: list[frozenset[str]], after: list[frozenset[str]]) -> int:
    """Primitive cluster operations needed to turn one partition into the other."""
    member_to_after = {m: j for j, cl in enumerate(after) for m in cl}
    links_ab: dict[int, set[int]] = {i: set() for i in range(len(before))}
    links_ba: dict[int, set[int]] = {j: set() for j in range(len(after))}
    for i, cl in enumerate(before):
        for m in cl:
            j = member_to_after.get(m)
            if j is not None:
                links_ab[i].add(j)
                links_ba[j].add(i)
    ops = 0
    for i, cl in enumerate(before):
        outs = links_ab[i]
        if not outs:
            ops += 1  # death
        elif len(outs) > 1:
            ops += 1 + len(outs)  # split
    for j, cl in enumerate(after):
        ins = links_ba[j]
        if not ins:
            ops += 1  # birth
        elif len(ins) > 1:
            ops += 1 + len(ins)  # merge
        else:
            i = next(iter(ins))
            if len(links_ab[i]) == 1 and before[i] != cl:
                ops += (1 if cl - before[i] else 0) + (1 if before[i] - cl else 0)
    return ops


def _study_stream(rng: random.Random, ticks: int, window_len: int) -> list[list[Post]]:
    """Stable clusters, one short-lived cohort per moment, and mixed posts.

    Each mixed post shares entities with a stable cluster and with the
    cohort expiring at its own arrival moment: processed deletions-first it
    simply grows the stable cluster, while an interleaved order first merges
    it with the dying cohort and then tears that union down again.
    """
    stable_vocabs = [[f"s{c}w{i}" for i in range(5)] for c in range(3)]
    stream = []
    for m in range(1, ticks + window_len + 1):
        batch = []
        for c, vocab in enumerate(stable_vocabs):
            for i in range(rng.randint(2, 3)):
                batch.append(Post(f"m{m:04d}s{c}p{i}", frozenset(vocab), m, moment=m))
        cohort_vocab = [f"e{m}w{i}" for i in range(5)]
        for i in range(rng.randint(5, 7)):
            batch.append(Post(f"m{m:04d}e{i}", frozenset(cohort_vocab), m, moment=m))
        if m > window_len:
            expired_vocab = [f"e{m - window_len}w{i}" for i in range(5)]
            for i in range(rng.randint(1, 3)):
                sv = rng.choice(stable_vocabs)
                batch.append(
                    Post(f"m{m:04d}x{i}", frozenset(sv + expired_vocab), m, moment=m)
                )
        stream.append(batch)
    return stream


def deletion_order_study(
    seed: int = 11, ticks: int = 100, window_len: int = 4
) -> dict:
    """Mean primitive-op counts per tick: deletions-first vs interleaved.

    Both orderings apply the same single-post updates per tick and land on
    the same final state; only the sequencing differs. Decay is disabled so
    that edges between incoming and expiring posts actually form; those are
    exactly the edges an interleaved order constructs and then tears down.
    """
    rng = random.Random(seed)
    params = SimilarityParams(decay=DecayKind.NONE)
    stream = _study_stream(rng, ticks, window_len)
    universe = [p for batch in stream for p in batch]
    shuffles = [random.Random(seed * 1000 + i) for i in range(len(stream))]

    costs = {"deletions_first": [], "interleaved": []}
    for mode in ("deletions_first", "interleaved"):
        sim = _StepSimulator(universe, params)
        window: dict[int, list[str]] = {}
        for idx, batch in enumerate(stream):
            m = idx + 1
            removals = sorted(
                pid for mm, pids in window.items() if mm <= m - window_len for pid in pids
            )
            additions = sorted(p.id for p in batch)
            if mode == "deletions_first":
                steps = [("del", pid) for pid in removals] + [
                    ("add", pid) for pid in additions
                ]
            else:
                steps = [("del", pid) for pid in removals] + [
                    ("add", pid) for pid in additions
                ]
                shuffles[idx].shuffle(steps)
            cost = 0
            current = sim.partition(m)
            for action, pid in steps:
                if action == "del":
                    sim.remove(pid)
                else:
                    sim.add(pid)
                after = sim.partition(m)
                cost += _partition_ops(current, after)
                current = after
            window = {mm: pids for mm, pids in window.items() if mm > m - window_len}
            window[m] = [p.id for p in batch]
            if idx >= window_len:  # skip the window fill-up
                costs[mode].append(cost)
    return {
        "ticks": len(costs["deletions_first"]),
        "mean_deletions_first": statistics.fmean(costs["deletions_first"]),
        "mean_interleaved": statistics.fmean(costs["interleaved"]),
        "per_tick": costs,
    }


# --------------------------------------------------------------------------- #
# incremental-vs-scratch speedup sweep


def bench_stream(
    posts_per_moment: int, moments: int, seed: int = 7
) -> dict[int, list[Post]]:
    """Steady stream of many small planted clusters plus unique-entity noise."""
    rng = random.Random(seed)
    n_clusters = max(1, posts_per_moment // 25)
    cluster_posts = 20
    noise = posts_per_moment - n_clusters * cluster_posts
    vocabs = [[f"b{c}w{i}" for i in range(5)] for c in range(n_clusters)]
    out: dict[int, list[Post]] = {}
    serial = 0
    for m in range(1, moments + 1):
        batch = []
        for c, vocab in enumerate(vocabs):
            for i in range(cluster_posts):
                batch.append(
                    Post(f"m{m:04d}c{c:03d}p{i:02d}", frozenset(vocab), m, moment=m)
                )
        for i in range(max(0, noise)):
            serial += 1
            batch.append(
                Post(f"m{m:04d}n{i:04d}", frozenset([f"nz{serial}"]), m, moment=m)
            )
        rng.shuffle(batch)
        out[m] = batch
    return out


def speedup_sweep(
    posts_per_moment: int = 2000,
    window_len: int = 10,
    steps_list: tuple[int, ...] = (1, 2, 4),
    measured_ticks: int = 3,
    seed: int = 7,
) -> list[dict]:
    """Per-tick wall clock of the incremental path vs from-scratch recomputation.

    The window advances ``step`` moments per tick; the from-scratch path
    rebuilds the whole window at each tick landing moment and links adjacent
    snapshots by overlap matching.
    """
    max_step = max(steps_list)
    moments = window_len + max_step * measured_ticks
    stream = bench_stream(posts_per_moment, moments, seed)
    params = EngineConfig(window_len=window_len).similarity_params()
    rows = []
    for step in steps_list:
        config = EngineConfig(window_len=window_len, annotate_ops=False)
        engine = Engine(config)
        engine.ensure_started(1)
        for m in range(1, window_len + 1):
            engine.tick(stream[m])
        engine_ms = []
        landings = []
        m = window_len
        for _ in range(measured_ticks):
            batch = [p for s in range(1, step + 1) for p in stream[m + s]]
            started = time.perf_counter()
            engine.tick(batch, steps=step)
            engine_ms.append((time.perf_counter() - started) * 1000.0)
            m += step
            landings.append(m)
        oracle_ms = []
        prev_members = None
        for m in landings:
            in_window = [
                p for mm in range(m - window_len + 1, m + 1) for p in stream.get(mm, [])
            ]
            started = time.perf_counter()
            clusters = oracle_tick(in_window, m, params)
            members = [c.members() for c in clusters]
            if prev_members is not None:
                baseline_match([(m - step, prev_members), (m, members)])
            prev_members = members
            oracle_ms.append((time.perf_counter() - started) * 1000.0)
        e_mean = statistics.fmean(engine_ms)
        o_mean = statistics.fmean(oracle_ms)
        rows.append(
            {
                "step": step,
                "step_over_window": step / window_len,
                "engine_ms": e_mean,
                "oracle_ms": o_mean,
                "ratio": e_mean / o_mean,
            }
        )
    return rows


# --------------------------------------------------------------------------- #
# density parameter sweep


# Sunflower profiles: a kernel of h shared entities plus a unique petal per
# post gives every pair the exact Jaccard h / (2s - h). Each profile's edges
# (and the small pairs' cores) drop out at a known threshold step.
_SUNFLOWER_PROFILES = (
    # (kernel, set_size) -> pairwise Jaccard
    (2, 4),  # 1/3   : gone at 0.4
    (3, 5),  # 3/7   : gone at 0.5
    (2, 3),  # 1/2   : gone at 0.6
    (3, 4),  # 3/5   : gone at 0.7
    (5, 6),  # 5/7   : gone at 0.8
    (4, 4),  # 1     : never gone
)


def _sunflower(tag: str, kernel: int, size: int, count: int, moment: int) -> list[Post]:
    shared = [f"{tag}-k{i}" for i in range(kernel)]
    posts = []
    for i in range(count):
        petal = [f"{tag}-p{i}-{j}" for j in range(size - kernel)]
        posts.append(
            Post(f"{tag}-{i:02d}", frozenset(shared + petal), moment, moment=moment)
        )
    return posts


def density_fixture(t: int = 10) -> list[Post]:
    """A fixed window whose events and cores thin out step by step.

    Event-sized sunflower groups lose their core edges (and so their event
    status) at successive thresholds while their posts stay core; small
    sunflower pairs lose core status itself at the same grades; one
    cross-moment chain fragments when gap-one edges stop being core edges.
    """
    posts: list[Post] = []
    for level, (kernel, size) in enumerate(_SUNFLOWER_PROFILES):
        for g in range(2):
            posts.extend(_sunflower(f"ev{level}{g}", kernel, size, 12, t))
        for pair in range(4):
            posts.extend(_sunflower(f"pr{level}{pair}", kernel, size, 2, t))
    chain_vocab = frozenset(f"ch-w{i}" for i in range(4))
    for m in range(t - 4, t + 1):
        for i in range(3):
            posts.append(Post(f"ch-{m:02d}-{i}", chain_vocab, m, moment=m))
    for i in range(30):
        posts.append(Post(f"nz-{i:02d}", frozenset([f"dz{i}"]), t, moment=t))
    return posts


def density_sweep(
    posts: list[Post],
    t: int,
    eps0: float = 0.2,
    thresholds: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
    phi: int = 10,
) -> list[dict]:
    """Core/core-edge/event counts as delta1 = eps1 rises, eps0 fixed.

    Edges and neighbor sums depend only on eps0, so they are computed once.
    """
    base = SimilarityParams(eps0=eps0, eps1=max(eps0, min(thresholds)), delta1=min(thresholds))
    table = DecayTable(base.decay)
    adj = reference_edges(posts, base)
    by_id = {p.id: p for p in posts}
    sums = {}
    for pid in sorted(by_id):
        total = 0.0
        for nbr in sorted(adj[pid]):
            total += adj[pid][nbr]
        sums[pid] = total
    rows = []
    for threshold in thresholds:
        cores = {
            pid
            for pid in by_id
            if quantize_weight(sums[pid] / table.value(t - by_id[pid].moment)) >= threshold
        }
        core_edges = [
            (a, b)
            for a in sorted(cores)
            for b, w in adj[a].items()
            if a < b and b in cores and w >= threshold
        ]
        core_adj: dict[str, list[str]] = {pid: [] for pid in cores}
        for a, b in core_edges:
            core_adj[a].append(b)
            core_adj[b].append(a)
        events = 0
        seen: set[str] = set()
        for seed_id in sorted(cores):
            if seed_id in seen:
                continue
            comp = {seed_id}
            queue = deque([seed_id])
            while queue:
                node = queue.popleft()
                for nbr in core_adj[node]:
                    if nbr not in comp:
                        comp.add(nbr)
                        queue.append(nbr)
            seen |= comp
            border = set()
            for pid in comp:
                for nbr in adj[pid]:
                    if nbr not in cores:
                        border.add(nbr)
            if len(comp) + len(border) >= phi:
                events += 1
        rows.append(
            {
                "threshold": threshold,
                "num_core": len(cores),
                "num_core_edges": len(core_edges),
                "num_events": events,
            }
        )
    return rows
