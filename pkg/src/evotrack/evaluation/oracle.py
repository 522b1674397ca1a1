"""From-scratch reference pipeline: no incremental state anywhere.

Builds the post network by all-pairs filtering, classifies every node,
collects core edges and components, and generates clusters. Small inputs
take a pure-Python double loop; large inputs take a sparse-matrix kernel
that evaluates the same pairs with the same float expression. The two
kernels are cross-checked in tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..ingest import Post
from ..similarity import DecayTable, SimilarityParams, pair_weight, quantize_weight

__all__ = [
    "OracleCluster",
    "reference_edges",
    "reference_edges_dense",
    "reference_edges_sparse",
    "oracle_core_set",
    "oracle_tick",
    "cluster_family",
]

# Above this many posts the all-pairs kernel switches to sparse matrices.
SPARSE_KERNEL_THRESHOLD = 800


@dataclass(frozen=True)
class OracleCluster:
    core: frozenset[str]
    border: frozenset[str]

    def members(self) -> frozenset[str]:
        return self.core | self.border


def reference_edges_dense(
    posts: list[Post], params: SimilarityParams
) -> dict[str, dict[str, float]]:
    """All-pairs edge construction by a literal double loop."""
    table = DecayTable(params.decay)
    ordered = sorted(posts, key=lambda p: p.id)
    adj: dict[str, dict[str, float]] = {p.id: {} for p in ordered}
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            hits = len(a.entities & b.entities)
            if hits == 0:
                continue
            w = pair_weight(
                hits,
                len(a.entities),
                len(b.entities),
                table.value(abs(a.moment - b.moment)),
            )
            if w >= params.eps0:
                adj[a.id][b.id] = w
                adj[b.id][a.id] = w
    return adj


def reference_edges_sparse(
    posts: list[Post], params: SimilarityParams
) -> dict[str, dict[str, float]]:
    """All-pairs edge construction through a sparse incidence product."""
    table = DecayTable(params.decay)
    ordered = sorted(posts, key=lambda p: p.id)
    adj: dict[str, dict[str, float]] = {p.id: {} for p in ordered}
    if len(ordered) < 2:
        return adj
    vocab: dict[str, int] = {}
    indptr = [0]
    indices: list[int] = []
    for post in ordered:
        for entity in sorted(post.entities):
            idx = vocab.setdefault(entity, len(vocab))
            indices.append(idx)
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (
            np.ones(len(indices), dtype=np.int64),
            np.array(indices, dtype=np.int64),
            np.array(indptr, dtype=np.int64),
        ),
        shape=(len(ordered), max(len(vocab), 1)),
    )
    hits_mat = (mat @ mat.T).tocoo()
    sizes = np.array([len(p.entities) for p in ordered], dtype=np.int64)
    moments = np.array([p.moment for p in ordered], dtype=np.int64)
    max_gap = int(np.max(moments) - np.min(moments)) if len(ordered) else 0
    decay_vec = np.array([table.value(g) for g in range(max_gap + 1)], dtype=np.float64)

    rows, cols, hits = hits_mat.row, hits_mat.col, hits_mat.data.astype(np.float64)
    keep = rows < cols
    rows, cols, hits = rows[keep], cols[keep], hits[keep]
    gaps = np.abs(moments[rows] - moments[cols])
    union = (sizes[rows] + sizes[cols]).astype(np.float64) - hits
    weights = hits / (union * decay_vec[gaps])
    keep = weights >= params.eps0
    for r, c, w in zip(rows[keep], cols[keep], weights[keep]):
        a, b = ordered[r].id, ordered[c].id
        adj[a][b] = w
        adj[b][a] = w
    return adj


def reference_edges(posts: list[Post], params: SimilarityParams) -> dict[str, dict[str, float]]:
    if len(posts) > SPARSE_KERNEL_THRESHOLD:
        return reference_edges_sparse(posts, params)
    return reference_edges_dense(posts, params)


def _core_set(
    posts: list[Post],
    adj: dict[str, dict[str, float]],
    t: int,
    params: SimilarityParams,
    table: DecayTable,
) -> frozenset[str]:
    cores = set()
    by_id = {p.id: p for p in posts}
    for pid in sorted(by_id):
        total = 0.0
        for nbr in sorted(adj[pid]):
            total += adj[pid][nbr]
        gap = t - by_id[pid].moment
        if quantize_weight(total / table.value(gap)) >= params.delta1:
            cores.add(pid)
    return frozenset(cores)


def oracle_core_set(posts: list[Post], t: int, params: SimilarityParams) -> frozenset[str]:
    """Core posts of the network over ``posts`` evaluated at moment ``t``."""
    table = DecayTable(params.decay)
    return _core_set(posts, reference_edges(posts, params), t, params, table)


def oracle_tick(posts: list[Post], t: int, params: SimilarityParams) -> list[OracleCluster]:
    """Clusters identified from scratch over the given in-window posts."""
    table = DecayTable(params.decay)
    adj = reference_edges(posts, params)
    cores = _core_set(posts, adj, t, params, table)
    core_adj: dict[str, list[str]] = {pid: [] for pid in cores}
    for a in sorted(cores):
        for b, w in adj[a].items():
            if b in cores and a < b and w >= params.eps1:
                core_adj[a].append(b)
                core_adj[b].append(a)
    clusters = []
    seen: set[str] = set()
    for seed in sorted(cores):
        if seed in seen:
            continue
        comp = {seed}
        queue = deque([seed])
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
        clusters.append(OracleCluster(frozenset(comp), frozenset(border)))
    return clusters


def cluster_family(clusters) -> dict[frozenset[str], frozenset[str]]:
    """Map core set -> border set; the partition-comparison shape.

    Accepts OracleClusters or anything exposing ``core`` / ``border``.
    """
    return {frozenset(c.core): frozenset(c.border) for c in clusters}
