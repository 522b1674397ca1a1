"""The evolving post network under a fading sliding time window.

Maintains nodes (posts with cached neighbor-sums), a symmetric weighted
adjacency (edges where fading similarity >= eps0), and an entity inverted
index used by linkage search. Window advancement is computed as a delta
(old posts out, new posts in) and applied by the caller so pre/post states
stay observable.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DuplicatePost, StaleTimestamp, UnknownPost
from .ingest import Post
from .similarity import DecayTable, SimilarityParams, pair_weight

__all__ = ["WindowConfig", "WindowDelta", "PostNetwork", "linkage_search"]

# Batches at least this large take the vectorized linkage path.
BULK_LINKAGE_THRESHOLD = 64


@dataclass(frozen=True)
class WindowConfig:
    """Sliding window of ``window_len`` moments advancing one moment per tick.

    ``tick_unit`` maps raw timestamps to moments (moment = timestamp // tick_unit).
    """

    window_len: int = 10
    tick_unit: int = 1

    def __post_init__(self) -> None:
        if self.window_len <= 2:
            raise ValueError(f"window_len must exceed 2, got {self.window_len}")
        if self.tick_unit < 1:
            raise ValueError(f"tick_unit must be >= 1, got {self.tick_unit}")


@dataclass(frozen=True)
class WindowDelta:
    """Posts leaving and entering the window for one tick."""

    to_moment: int
    steps: int
    old_ids: tuple[str, ...]
    new_posts: tuple[Post, ...]

    @property
    def old_set(self) -> frozenset[str]:
        return frozenset(self.old_ids)


class PostNetwork:
    """Snapshot of the post network at the current moment.

    Single-writer: one tick is mutated at a time; read-only queries are fine
    between ticks.
    """

    def __init__(self, params: SimilarityParams, window: WindowConfig):
        self.params = params
        self.window = window
        self.decay_table = DecayTable(params.decay)
        self.now: int | None = None
        self.posts: dict[str, Post] = {}
        self.sums: dict[str, float] = {}
        self.adj: dict[str, dict[str, float]] = {}
        self.entity_index: dict[str, set[str]] = {}
        self.by_moment: dict[int, list[str]] = {}
        # Instrumentation for the linkage complexity contract.
        self.counters: Counter = Counter()

    # ------------------------------------------------------------------ #
    # basic queries

    def __len__(self) -> int:
        return len(self.posts)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self.posts

    def moment_of_timestamp(self, timestamp: int) -> int:
        return timestamp // self.window.tick_unit

    def neighbor_sum(self, post_id: str) -> float:
        if post_id not in self.posts:
            raise UnknownPost(post_id)
        return self.sums[post_id]

    def recomputed_sum(self, post_id: str) -> float:
        """Exact re-summation of incident edge weights (sorted neighbor order)."""
        if post_id not in self.posts:
            raise UnknownPost(post_id)
        total = 0.0
        for nbr in sorted(self.adj[post_id]):
            total += self.adj[post_id][nbr]
        return total

    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adj.values()) // 2

    # ------------------------------------------------------------------ #
    # linkage search

    def linkage_candidates(self, post: Post) -> dict[str, int]:
        """Hit counts per candidate found through the entity index.

        Only posts sharing at least one entity with ``post`` are candidates;
        nothing else is touched.
        """
        hits: Counter = Counter()
        for entity in post.entities:
            for other_id in self.entity_index.get(entity, ()):
                hits[other_id] += 1
        self.counters["linkage_candidates"] += len(hits)
        return dict(hits)

    def linkage_search(self, post: Post) -> dict[str, float]:
        """Neighbors of a not-yet-inserted post with their edge weights.

        Equivalent to brute-force pairwise filtering over all in-window
        posts; touches only candidates sharing an entity.
        """
        if post.id in self.posts:
            raise DuplicatePost(post.id)
        eps0 = self.params.eps0
        size_p = len(post.entities)
        edges: dict[str, float] = {}
        candidates = self.linkage_candidates(post)
        for other_id in sorted(candidates):
            other = self.posts[other_id]
            self.counters["posts_touched"] += 1
            gap = abs(post.moment - other.moment)
            w = pair_weight(
                candidates[other_id], size_p, len(other.entities), self.decay_table.value(gap)
            )
            if w >= eps0:
                edges[other_id] = w
        return edges

    def bulk_linkage(self, posts: list[Post]) -> dict[str, dict[str, float]]:
        """Vectorized linkage for a batch of not-yet-inserted posts.

        Returns the full edge map for each batch post, including edges among
        batch posts. Produces the same weights as ``linkage_search`` (shared
        decay table, same float expression).
        """
        result: dict[str, dict[str, float]] = {p.id: {} for p in posts}
        if not posts:
            return result
        if len(posts) < BULK_LINKAGE_THRESHOLD:
            return self._bulk_linkage_sequential(posts)

        vocab: dict[str, int] = {}
        old_ids = sorted(self.posts)
        old_rows = self._incidence(
            [self.posts[i] for i in old_ids], vocab, grow=True
        )
        new_rows = self._incidence(posts, vocab, grow=True)
        n_ent = len(vocab)
        mat_old = self._csr(old_rows, n_ent)
        mat_new = self._csr(new_rows, n_ent)

        max_gap = self.window.window_len + 1
        decay_vec = np.array(
            [self.decay_table.value(g) for g in range(max_gap + 1)], dtype=np.float64
        )
        new_sizes = np.array([len(p.entities) for p in posts], dtype=np.int64)
        new_moments = np.array([p.moment for p in posts], dtype=np.int64)

        def emit(hits_mat, col_ids, col_sizes, col_moments, skip_self_pairs):
            coo = hits_mat.tocoo()
            self.counters["linkage_candidates"] += coo.nnz
            if coo.nnz == 0:
                return
            rows, cols, hits = coo.row, coo.col, coo.data.astype(np.float64)
            gaps = np.abs(new_moments[rows] - col_moments[cols])
            union = (new_sizes[rows] + col_sizes[cols]).astype(np.float64) - hits
            weights = hits / (union * decay_vec[gaps])
            keep = weights >= self.params.eps0
            if skip_self_pairs:
                keep &= rows < cols
            for r, c, w in zip(rows[keep], cols[keep], weights[keep]):
                a = posts[r].id
                b = col_ids[c]
                result[a][b] = w
                if skip_self_pairs:
                    result[b][a] = w

        if old_ids:
            old_sizes = np.array(
                [len(self.posts[i].entities) for i in old_ids], dtype=np.int64
            )
            old_moments = np.array([self.posts[i].moment for i in old_ids], dtype=np.int64)
            emit(mat_new @ mat_old.T, old_ids, old_sizes, old_moments, False)
        emit(mat_new @ mat_new.T, [p.id for p in posts], new_sizes, new_moments, True)
        for pid in result:
            result[pid] = dict(sorted(result[pid].items()))
        return result

    def _bulk_linkage_sequential(self, posts: list[Post]) -> dict[str, dict[str, float]]:
        """Per-post linkage plus a scratch index over the batch itself."""
        eps0 = self.params.eps0
        result: dict[str, dict[str, float]] = {}
        scratch: dict[str, list[Post]] = {}
        for post in posts:
            edges = self.linkage_search(post)
            batch_hits: Counter = Counter()
            for entity in post.entities:
                for earlier in scratch.get(entity, ()):
                    batch_hits[earlier.id] += 1
            earlier_by_id = {q.id: q for lst in scratch.values() for q in lst}
            for other_id in sorted(batch_hits):
                other = earlier_by_id[other_id]
                gap = abs(post.moment - other.moment)
                w = pair_weight(
                    batch_hits[other_id],
                    len(post.entities),
                    len(other.entities),
                    self.decay_table.value(gap),
                )
                if w >= eps0:
                    edges[other_id] = w
                    result[other_id][post.id] = w
            result[post.id] = dict(sorted(edges.items()))
            for entity in post.entities:
                scratch.setdefault(entity, []).append(post)
        return result

    @staticmethod
    def _incidence(posts: list[Post], vocab: dict[str, int], grow: bool) -> list[list[int]]:
        rows = []
        for post in posts:
            cols = []
            for entity in sorted(post.entities):
                idx = vocab.get(entity)
                if idx is None:
                    if not grow:
                        continue
                    idx = len(vocab)
                    vocab[entity] = idx
                cols.append(idx)
            rows.append(cols)
        return rows

    @staticmethod
    def _csr(rows: list[list[int]], n_cols: int) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        for cols in rows:
            indices.extend(cols)
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.int64)
        return sparse.csr_matrix(
            (data, np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(len(rows), max(n_cols, 1)),
        )

    # ------------------------------------------------------------------ #
    # mutation

    def add_post(self, post: Post, edges: dict[str, float] | None = None) -> set[str]:
        """Insert a post, materialize its edges, update neighbor sums.

        ``edges`` may carry a precomputed linkage result; entries pointing at
        absent posts are ignored (they belong to batch mates not yet added).
        Returns the ids of neighbors whose sums changed.
        """
        if post.id in self.posts:
            raise DuplicatePost(post.id)
        if edges is None:
            edges = self.linkage_search(post)
        self.posts[post.id] = post
        self.adj[post.id] = {}
        my_sum = 0.0
        changed: set[str] = set()
        for other_id in sorted(edges):
            if other_id not in self.posts or other_id == post.id:
                continue
            w = edges[other_id]
            self.adj[post.id][other_id] = w
            self.adj[other_id][post.id] = w
            self.sums[other_id] += w
            my_sum += w
            changed.add(other_id)
        self.sums[post.id] = my_sum
        for entity in post.entities:
            self.entity_index.setdefault(entity, set()).add(post.id)
        self.by_moment.setdefault(post.moment, []).append(post.id)
        return changed

    def remove_post(self, post_id: str) -> set[str]:
        """Remove a post, its incident edges and index entries.

        Returns the ids of former neighbors whose sums changed.
        """
        post = self.posts.get(post_id)
        if post is None:
            raise UnknownPost(post_id)
        changed: set[str] = set()
        for other_id, w in self.adj[post_id].items():
            nbrs = self.adj[other_id]
            del nbrs[post_id]
            self.sums[other_id] -= w
            if not nbrs:
                self.sums[other_id] = 0.0  # kill float residue on isolation
            changed.add(other_id)
        del self.adj[post_id]
        del self.posts[post_id]
        del self.sums[post_id]
        for entity in post.entities:
            bucket = self.entity_index.get(entity)
            if bucket is not None:
                bucket.discard(post_id)
                if not bucket:
                    del self.entity_index[entity]
        bucket = self.by_moment.get(post.moment)
        if bucket is not None:
            bucket.remove(post_id)
            if not bucket:
                del self.by_moment[post.moment]
        return changed

    # ------------------------------------------------------------------ #
    # window

    def start_at(self, moment: int) -> None:
        """Anchor an empty network just before its first tick."""
        if self.posts or self.now is not None:
            raise StaleTimestamp("network already started")
        self.now = moment

    def advance_window(self, incoming: list[Post], steps: int = 1) -> WindowDelta:
        """Compute the window delta for the next tick without mutating.

        ``incoming`` posts must map to moments in (now, now + steps]. Posts
        with moment <= now + steps - window_len fall out of the window.
        """
        if self.now is None:
            raise StaleTimestamp("network not started")
        if steps < 1:
            raise ValueError("steps must be >= 1")
        target = self.now + steps
        stamped = []
        for post in incoming:
            moment = self.moment_of_timestamp(post.timestamp)
            if moment <= self.now or moment > target:
                raise StaleTimestamp(
                    f"post {post.id!r} maps to moment {moment}, window advancing "
                    f"from {self.now} to {target}"
                )
            stamped.append(post.at_moment(moment))
        cutoff = target - self.window.window_len
        old_ids = []
        for moment in sorted(self.by_moment):
            if moment > cutoff:
                break
            old_ids.extend(sorted(self.by_moment[moment]))
        return WindowDelta(
            to_moment=target, steps=steps, old_ids=tuple(old_ids), new_posts=tuple(stamped)
        )

    # ------------------------------------------------------------------ #
    # serialization

    def state_dict(self) -> dict:
        nodes = [
            [
                pid,
                sorted(post.entities),
                post.timestamp,
                post.author,
                post.moment,
                self.sums[pid],
            ]
            for pid, post in sorted(self.posts.items())
        ]
        edges = [
            [a, b, w]
            for a in sorted(self.adj)
            for b, w in sorted(self.adj[a].items())
            if a < b
        ]
        return {
            "now": self.now,
            "window_len": self.window.window_len,
            "tick_unit": self.window.tick_unit,
            "decay": self.params.decay.value,
            "eps0": self.params.eps0,
            "eps1": self.params.eps1,
            "delta1": self.params.delta1,
            "nodes": nodes,
            "edges": edges,
        }

    @classmethod
    def from_state(cls, state: dict) -> "PostNetwork":
        from .similarity import DecayKind

        params = SimilarityParams(
            decay=DecayKind(state["decay"]),
            eps0=state["eps0"],
            eps1=state["eps1"],
            delta1=state["delta1"],
        )
        window = WindowConfig(window_len=state["window_len"], tick_unit=state["tick_unit"])
        net = cls(params, window)
        net.now = state["now"]
        for pid, entities, timestamp, author, moment, total in state["nodes"]:
            post = Post(pid, frozenset(entities), timestamp, author, moment)
            net.posts[pid] = post
            net.adj[pid] = {}
            net.sums[pid] = total
            for entity in post.entities:
                net.entity_index.setdefault(entity, set()).add(pid)
            net.by_moment.setdefault(moment, []).append(pid)
        for a, b, w in state["edges"]:
            net.adj[a][b] = w
            net.adj[b][a] = w
        return net


def linkage_search(net: PostNetwork, post: Post) -> dict[str, float]:
    """Module-level alias of :meth:`PostNetwork.linkage_search`."""
    return net.linkage_search(post)
