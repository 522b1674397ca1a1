"""Entity annotation: one reinforcement pass over the post-entity bipartite graph.

Each event post contributes its current weight to every entity it contains;
the resulting entity scores, sorted descending, form the word-cloud data.
"""

from __future__ import annotations

from typing import Iterable

from .errors import EmptyEvent
from .postnet import PostNetwork
from .sketch import post_weight

__all__ = ["score_entities", "annotate_cluster"]


def score_entities(
    weighted_posts: Iterable[tuple[Iterable[str], float]],
    top_k: int | None = None,
) -> list[tuple[str, float]]:
    """Entity popularity from (entities, post weight) pairs.

    One matrix-vector product, no normalization: the score of an entity is
    the sum of the weights of the posts containing it. Sorted by score
    descending, ties broken lexicographically.
    """
    scores: dict[str, float] = {}
    for entities, weight in weighted_posts:
        for entity in sorted(entities):
            scores[entity] = scores.get(entity, 0.0) + weight
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:top_k] if top_k is not None else ranked


def annotate_cluster(
    net: PostNetwork,
    member_ids: Iterable[str],
    t: int,
    top_k: int | None = None,
) -> list[tuple[str, float]]:
    """Ranked entity annotation for an event's posts at moment ``t``.

    Border posts participate with their (sub-threshold) weights. Raises
    EmptyEvent when none of the members are present in the network.
    """
    present = sorted(pid for pid in member_ids if pid in net.posts)
    if not present:
        raise EmptyEvent("no annotatable posts")
    pairs = (
        (net.posts[pid].entities, post_weight(net, pid, t)) for pid in present
    )
    return score_entities(pairs, top_k=top_k)
