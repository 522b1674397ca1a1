"""Synthetic post streams with planted clusters and ground-truth op schedules.

Planted clusters draw entities from disjoint per-cluster vocabularies, so
intra-cluster similarity clears the edge threshold while cross-cluster
similarity stays at zero. Merge directives add bridge posts spanning two
vocabularies; the bridges stop early enough that their expiry produces the
scheduled split. Ground truth uses the tracker's op vocabulary.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from ..errors import InvalidScript

__all__ = [
    "PlantedCluster",
    "MergeDirective",
    "SplitDirective",
    "DieDirective",
    "ScenarioScript",
    "generate",
    "records_to_lines",
]


@dataclass(frozen=True)
class PlantedCluster:
    name: str
    start: int
    end: int
    posts_per_moment: int
    vocab_size: int = 5
    entities_per_post: int = 5

    def __post_init__(self) -> None:
        if self.start < 1 or self.end < self.start:
            raise InvalidScript(f"cluster {self.name}: bad span {self.start}..{self.end}")
        if not 1 <= self.entities_per_post <= self.vocab_size:
            raise InvalidScript(f"cluster {self.name}: entities_per_post out of range")
        if self.posts_per_moment < 1:
            raise InvalidScript(f"cluster {self.name}: posts_per_moment < 1")

    def vocab(self) -> list[str]:
        return [f"{self.name}-w{i}" for i in range(self.vocab_size)]


@dataclass(frozen=True)
class MergeDirective:
    a: str
    b: str
    at: int
    bridge_posts: int = 3


@dataclass(frozen=True)
class SplitDirective:
    a: str  # names any cluster of the merged pair
    at: int


@dataclass(frozen=True)
class DieDirective:
    name: str
    at: int  # no posts from this moment on


@dataclass(frozen=True)
class ScenarioScript:
    seed: int
    moments: int
    window_len: int
    clusters: tuple[PlantedCluster, ...]
    merges: tuple[MergeDirective, ...] = ()
    splits: tuple[SplitDirective, ...] = ()
    deaths: tuple[DieDirective, ...] = ()
    noise_per_moment: int = 0
    noise_rate: float = 0.0


@dataclass
class _Track:
    """One live cluster (or merged pair) during ground-truth simulation."""

    names: tuple[str, ...]
    alive: bool = True
    prev_count: int = 0


def _validate(script: ScenarioScript) -> dict[str, PlantedCluster]:
    by_name = {}
    for cluster in script.clusters:
        if cluster.name in by_name:
            raise InvalidScript(f"duplicate cluster name {cluster.name!r}")
        if cluster.end > script.moments:
            raise InvalidScript(f"cluster {cluster.name} outlives the stream")
        by_name[cluster.name] = cluster
    if not 0.0 <= script.noise_rate <= 1.0:
        raise InvalidScript("noise_rate must be in [0, 1]")
    for die in script.deaths:
        if die.name not in by_name:
            raise InvalidScript(f"die references unknown cluster {die.name!r}")
        if die.at <= by_name[die.name].start:
            raise InvalidScript(f"die({die.name}) precedes the cluster's start")
    merged_names = set()
    for merge in script.merges:
        for name in (merge.a, merge.b):
            if name not in by_name:
                raise InvalidScript(f"merge references unknown cluster {name!r}")
            if name in merged_names:
                raise InvalidScript(f"cluster {name!r} appears in two merges")
            merged_names.add(name)
        a, b = by_name[merge.a], by_name[merge.b]
        if a.vocab_size != b.vocab_size:
            raise InvalidScript("merge requires equal vocab sizes")
        if (
            a.entities_per_post != a.vocab_size
            or b.entities_per_post != b.vocab_size
        ):
            raise InvalidScript("merge requires full-vocabulary posts")
        if merge.at <= max(a.start, b.start):
            raise InvalidScript("merge must come after both clusters are born")
        if merge.bridge_posts < 1:
            raise InvalidScript("merge needs at least one bridge post")
    for split in script.splits:
        merge = _merge_for(script, split.a)
        if merge is None:
            raise InvalidScript(f"split({split.a}) has no matching merge")
        if split.at < merge.at + script.window_len:
            raise InvalidScript(
                "split must be at least window_len moments after its merge"
            )
        if split.at > script.moments:
            raise InvalidScript("split is past the end of the stream")
    return by_name


def _merge_for(script: ScenarioScript, name: str) -> MergeDirective | None:
    for merge in script.merges:
        if name in (merge.a, merge.b):
            return merge
    return None


def _split_for(script: ScenarioScript, merge: MergeDirective) -> SplitDirective | None:
    for split in script.splits:
        if split.a in (merge.a, merge.b):
            return split
    return None


def generate(script: ScenarioScript) -> tuple[list[dict], list[dict]]:
    """Emit (records, ground_truth) for a scenario; deterministic under seed.

    Ground-truth sizes are exact when noise_rate is 0; a noise_rate of 1
    turns every planted post into noise and the truth is empty.
    """
    by_name = _validate(script)
    rng = random.Random(script.seed)
    window_len = script.window_len

    eff_end = {
        name: cluster.end for name, cluster in by_name.items()
    }
    for die in script.deaths:
        eff_end[die.name] = min(eff_end[die.name], die.at - 1)

    def emits(name: str, m: int) -> int:
        cluster = by_name[name]
        return cluster.posts_per_moment if cluster.start <= m <= eff_end[name] else 0

    bridge_span = {}
    for merge in script.merges:
        split = _split_for(script, merge)
        if split is not None:
            last = split.at - window_len
        else:
            last = min(eff_end[merge.a], eff_end[merge.b])
        bridge_span[(merge.a, merge.b)] = (merge.at, last, merge.bridge_posts)

    def bridge_emits(pair: tuple[str, str], m: int) -> int:
        first, last, count = bridge_span[pair]
        return count if first <= m <= last else 0

    records: list[dict] = []
    noise_serial = 0

    def noise_record(m: int) -> dict:
        nonlocal noise_serial
        noise_serial += 1
        return {
            "id": f"noise-{noise_serial:05d}",
            "timestamp": m,
            "author": f"a{rng.randrange(1000)}",
            "entities": [f"zz-{noise_serial:05d}"],
        }

    for m in range(1, script.moments + 1):
        for cluster in sorted(script.clusters, key=lambda c: c.name):
            vocab = cluster.vocab()
            for i in range(emits(cluster.name, m)):
                if script.noise_rate > 0.0 and rng.random() < script.noise_rate:
                    records.append(noise_record(m))
                    continue
                if cluster.entities_per_post == cluster.vocab_size:
                    entities = list(vocab)
                else:
                    entities = rng.sample(vocab, cluster.entities_per_post)
                records.append(
                    {
                        "id": f"{cluster.name}-m{m:04d}-p{i:03d}",
                        "timestamp": m,
                        "author": f"a{rng.randrange(1000)}",
                        "entities": entities,
                    }
                )
        for merge in script.merges:
            pair = (merge.a, merge.b)
            union_vocab = by_name[merge.a].vocab() + by_name[merge.b].vocab()
            for i in range(bridge_emits(pair, m)):
                if script.noise_rate > 0.0 and rng.random() < script.noise_rate:
                    records.append(noise_record(m))
                    continue
                records.append(
                    {
                        "id": f"{merge.a}+{merge.b}-m{m:04d}-b{i:03d}",
                        "timestamp": m,
                        "author": f"a{rng.randrange(1000)}",
                        "entities": union_vocab,
                    }
                )
        for _ in range(script.noise_per_moment):
            records.append(noise_record(m))
    if not any(r["timestamp"] == script.moments for r in records):
        records.append(noise_record(script.moments))

    truth = [] if script.noise_rate >= 1.0 else _ground_truth(
        script, by_name, eff_end, bridge_span, exact=script.noise_rate == 0.0
    )
    return records, truth


def _ground_truth(
    script: ScenarioScript,
    by_name: dict[str, PlantedCluster],
    eff_end: dict[str, int],
    bridge_span: dict,
    exact: bool,
) -> list[dict]:
    window_len = script.window_len

    def emits(name: str, m: int) -> int:
        if m < 1:
            return 0
        cluster = by_name[name]
        return cluster.posts_per_moment if cluster.start <= m <= eff_end[name] else 0

    def track_emits(track: _Track, m: int) -> int:
        total = sum(emits(name, m) for name in track.names)
        if len(track.names) == 2:
            pair = track.names
            first, last, count = bridge_span[pair]
            if first <= m <= last:
                total += count
        return total

    def window_count(track: _Track, m: int) -> int:
        return sum(track_emits(track, j) for j in range(max(1, m - window_len + 1), m + 1))

    merges_at = {merge.at: merge for merge in script.merges}
    splits_at = {}
    for split in script.splits:
        merge = _merge_for(script, split.a)
        splits_at[split.at] = merge

    tracks: dict[tuple[str, ...], _Track] = {
        (name,): _Track(names=(name,), alive=False) for name in by_name
    }
    truth: list[dict] = []

    def op(m: int, kind: str, names, result_names, size_after: int | None) -> dict:
        return {
            "t": m,
            "kind": kind,
            "clusters": list(names),
            "result_clusters": list(result_names),
            "size_after": size_after if exact else None,
        }

    for m in range(1, script.moments + 1):
        if m in merges_at:
            merge = merges_at[m]
            pair = (merge.a, merge.b)
            a_track = tracks.pop((merge.a,))
            b_track = tracks.pop((merge.b,))
            fused = _Track(names=pair, alive=True)
            fused.prev_count = a_track.prev_count + b_track.prev_count
            tracks[pair] = fused
            count = window_count(fused, m)
            truth.append(op(m, "merge", [merge.a, merge.b], ["+".join(pair)], count))
            fused.prev_count = count
            continue_names = set(pair)
        else:
            continue_names = set()
        if m in splits_at:
            merge = splits_at[m]
            pair = (merge.a, merge.b)
            fused = tracks.pop(pair)
            parts = []
            for name in pair:
                part = _Track(names=(name,), alive=True)
                part.prev_count = window_count(part, m)
                tracks[(name,)] = part
                parts.append(part)
            truth.append(
                op(m, "split", ["+".join(pair)], list(pair), sum(p.prev_count for p in parts))
            )
            continue_names |= set(pair)

        for key in sorted(tracks):
            track = tracks[key]
            if set(track.names) & continue_names:
                continue  # this moment's change is the merge/split op itself
            count = window_count(track, m)
            label = "+".join(track.names)
            if not track.alive:
                if count > 0:
                    track.alive = True
                    truth.append(op(m, "birth", [label], [label], count))
            else:
                if count == 0:
                    track.alive = False
                    truth.append(op(m, "death", [label], [], 0))
                else:
                    removed = track_emits(track, m - window_len)
                    added = track_emits(track, m)
                    if removed:
                        truth.append(op(m, "shrink", [label], [label], track.prev_count - removed))
                    if added:
                        truth.append(op(m, "grow", [label], [label], count))
            track.prev_count = count
    return truth


def records_to_lines(records: list[dict]) -> list[str]:
    return [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records]
