"""Comparison baselines: term-frequency peak detection and snapshot matching.

Both exist for qualitative comparison with the incremental tracker. The
peak detector fires on per-moment term counts that clear the trailing
window's mean plus two standard deviations; the snapshot matcher links
clusters across adjacent moments by member overlap and by construction can
never produce a merge or a split.
"""

from __future__ import annotations

import math
import re
from collections import Counter

from ..ingest import Post
from ..track import EvolutionOp, classify_event

__all__ = [
    "hashtag_counts",
    "unigram_counts",
    "baseline_peaks",
    "baseline_match",
]

_HASHTAG = re.compile(r"#\w+")

# A spike must clear this absolute count before it can fire.
PEAK_MIN_COUNT = 5


def hashtag_counts(texts: list[str]) -> Counter:
    """Hashtag frequencies for one moment's raw texts."""
    counts: Counter = Counter()
    for text in texts:
        counts.update(tag.lower() for tag in _HASHTAG.findall(text))
    return counts


def unigram_counts(posts: list[Post]) -> Counter:
    """Entity frequencies for one moment's posts."""
    counts: Counter = Counter()
    for post in posts:
        counts.update(sorted(post.entities))
    return counts


def baseline_peaks(
    counts_by_moment: list[tuple[int, Counter]],
    window_len: int,
    min_count: int = PEAK_MIN_COUNT,
) -> list[tuple[int, str]]:
    """Detections (moment, term) where a term's count spikes above its history.

    A detection fires when the count strictly exceeds the trailing window's
    mean plus two standard deviations and reaches ``min_count``. The first
    moment has no history and never fires. A strictly greater-than test
    keeps constant-rate terms silent (their deviation is zero).
    """
    detections: list[tuple[int, str]] = []
    history: list[Counter] = []
    for moment, counts in counts_by_moment:
        if history:
            trailing = history[-window_len:]
            for term in sorted(counts):
                count = counts[term]
                if count < min_count:
                    continue
                series = [h.get(term, 0) for h in trailing]
                mean = sum(series) / len(series)
                var = sum((x - mean) ** 2 for x in series) / len(series)
                if count > mean + 2.0 * math.sqrt(var):
                    detections.append((moment, term))
        history.append(counts)
    return detections


def _jaccard_ids(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    hit = len(a & b)
    return hit / (len(a) + len(b) - hit)


def baseline_match(
    snapshots: list[tuple[int, list[frozenset[str]]]],
    kappa: float = 0.9,
    phi: int = 10,
) -> list[EvolutionOp]:
    """Track snapshot clusters across adjacent moments by member overlap.

    Clusters at t and t+1 with Jaccard overlap >= kappa are the same event
    (greedy best-first, one-to-one); a linked pair becomes grow or shrink by
    size comparison (identical memberships emit nothing). Unmatched new
    clusters are births, unmatched old ones deaths. Merges and splits are
    never emitted: a true merge leaves every individual overlap below kappa.
    """
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must be in (0, 1], got {kappa}")
    ops: list[EvolutionOp] = []
    next_id = 1
    prev: list[tuple[int, frozenset[str]]] = []  # (assigned id, members)
    for idx, (moment, clusters) in enumerate(snapshots):
        clusters = sorted(clusters, key=lambda c: (min(c), len(c)) if c else ("", 0))
        if idx == 0:
            current = []
            for members in clusters:
                current.append((next_id, members))
                ops.append(_birth(moment, next_id, members, phi))
                next_id += 1
            prev = current
            continue
        scored = []
        for i, (_, old) in enumerate(prev):
            for j, new in enumerate(clusters):
                overlap = _jaccard_ids(old, new)
                if overlap >= kappa:
                    scored.append((-overlap, i, j))
        scored.sort()
        linked_old: dict[int, int] = {}
        linked_new: dict[int, int] = {}
        for _, i, j in scored:
            if i in linked_old or j in linked_new:
                continue
            linked_old[i] = j
            linked_new[j] = i
        current = []
        for j, members in enumerate(clusters):
            if j in linked_new:
                old_id, old_members = prev[linked_new[j]]
                current.append((old_id, members))
                if members != old_members:
                    kind = "grow" if len(old_members) <= len(members) else "shrink"
                    ops.append(
                        EvolutionOp(
                            t=moment,
                            kind=kind,
                            ids=(old_id,),
                            result_ids=(old_id,),
                            added=tuple(sorted(members - old_members)),
                            removed=tuple(sorted(old_members - members)),
                            size_before=len(old_members),
                            size_after=len(members),
                            is_event_before=classify_event(len(old_members), phi),
                            is_event_after=classify_event(len(members), phi),
                        )
                    )
            else:
                current.append((next_id, members))
                ops.append(_birth(moment, next_id, members, phi))
                next_id += 1
        for i, (old_id, old_members) in enumerate(prev):
            if i not in linked_old:
                ops.append(
                    EvolutionOp(
                        t=moment,
                        kind="death",
                        ids=(old_id,),
                        result_ids=(),
                        added=(),
                        removed=tuple(sorted(old_members)),
                        size_before=len(old_members),
                        size_after=0,
                        is_event_before=classify_event(len(old_members), phi),
                        is_event_after=False,
                    )
                )
        prev = current
    return ops


def _birth(moment: int, new_id: int, members: frozenset[str], phi: int) -> EvolutionOp:
    return EvolutionOp(
        t=moment,
        kind="birth",
        ids=(new_id,),
        result_ids=(new_id,),
        added=tuple(sorted(members)),
        removed=(),
        size_before=0,
        size_after=len(members),
        is_event_before=False,
        is_event_after=classify_event(len(members), phi),
    )
