"""Post weights, node typing, and the incrementally maintained sketch graph.

The sketch is the subgraph induced by core posts and the core edges between
them. Each tick it is updated from three delta sets over the posts present
in both windows: cores lost to the removal of old posts, cores lost purely
to time decay, and non-cores promoted by the new posts. Decay demotions are
found through a lazy priority queue keyed by each core post's expiry moment
instead of rescanning every core post.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .errors import FutureQuery, InconsistentDelta, InconsistentState, NotCore
from .postnet import PostNetwork, WindowDelta
from .similarity import DecayKind, DecayTable, SimilarityParams, quantize_weight

__all__ = [
    "NodeType",
    "DeltaSets",
    "ComponentEvent",
    "SketchView",
    "SketchGraph",
    "post_weight",
    "classify_node",
    "core_expiry",
    "rebuild_sketch",
]


class NodeType(Enum):
    CORE = "core"
    BORDER = "border"
    NOISE = "noise"


@dataclass(frozen=True)
class DeltaSets:
    """Overlap posts whose core status flips this tick, by cause.

    A post is attributed to exactly one cause, tested in the order: removal
    of the outgoing subgraph, then time decay, then addition of the incoming
    subgraph. Posts that lose and regain core status within one tick are in
    no set.
    """

    promoted: frozenset[str]
    demoted_removal: frozenset[str]
    demoted_decay: frozenset[str]


@dataclass(frozen=True)
class ComponentEvent:
    """One bulk applied to the sketch and its component-level outcome."""

    action: str  # "remove" | "add"
    category: str  # expired | demoted_removal | demoted_decay | new | promoted
    bulk: tuple[str, ...]
    comp_id: int
    # remove: components left behind; () means the component vanished,
    # one entry means it stayed connected, several mean it split.
    fragments: tuple[tuple[int, tuple[str, ...]], ...] = ()
    # add: component ids fused into comp_id.
    absorbed: tuple[int, ...] = ()
    created: bool = False


@dataclass(frozen=True)
class SketchView:
    """Immutable snapshot used for from-scratch comparisons."""

    cores: frozenset[str]
    edges: frozenset[tuple[str, str]]
    components: tuple[frozenset[str], ...]

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(self.components)


def is_core_weight(total: float, gap: int, params: SimilarityParams, table: DecayTable) -> bool:
    """Threshold test on the decayed neighbor sum, drift-proofed by quantization."""
    return quantize_weight(total / table.value(gap)) >= params.delta1


def post_weight(net: PostNetwork, post_id: str, t: int) -> float:
    """Cached neighbor sum divided by the decay of the post's age at ``t``."""
    post = net.posts[post_id]
    if t < post.moment:
        raise FutureQuery(f"moment {t} precedes post {post_id!r} at {post.moment}")
    return net.sums[post_id] / net.decay_table.value(t - post.moment)


def classify_node(net: PostNetwork, post_id: str, t: int, params: SimilarityParams) -> NodeType:
    """Core / border / noise per current weights of the post and its neighbors."""
    table = net.decay_table
    post = net.posts[post_id]
    if is_core_weight(net.sums[post_id], t - post.moment, params, table):
        return NodeType.CORE
    for other_id in net.adj[post_id]:
        other = net.posts[other_id]
        if is_core_weight(net.sums[other_id], t - other.moment, params, table):
            return NodeType.BORDER
    return NodeType.NOISE


def expiry_gap(total: float, params: SimilarityParams, table: DecayTable) -> float:
    """Largest age (in moments) at which a neighbor sum still clears delta1."""
    if quantize_weight(total) < params.delta1:
        raise NotCore(f"sum {total} below delta1={params.delta1}")
    if params.decay is DecayKind.NONE:
        return math.inf
    if params.decay is DecayKind.RECIPROCAL:
        guess = total / params.delta1 - 1.0
    else:
        guess = math.log(total / params.delta1)
    gap = max(0, int(guess))
    # The closed form can be off by one ulp; settle on the exact integer.
    while gap > 0 and not is_core_weight(total, gap, params, table):
        gap -= 1
    while is_core_weight(total, gap + 1, params, table):
        gap += 1
    return gap


def core_expiry(net: PostNetwork, post_id: str, params: SimilarityParams) -> float:
    """Last moment at which a currently-core post stays core absent changes."""
    post = net.posts[post_id]
    gap = expiry_gap(net.sums[post_id], params, net.decay_table)
    return math.inf if gap is math.inf else post.moment + gap


def rebuild_sketch(net: PostNetwork, t: int, params: SimilarityParams) -> SketchView:
    """Full from-scratch sketch over the current network state.

    Re-sums incident weights per node (ignoring cached sums), classifies,
    collects core edges between core posts and labels components.
    """
    table = net.decay_table
    cores = set()
    for pid in sorted(net.posts):
        post = net.posts[pid]
        if is_core_weight(net.recomputed_sum(pid), t - post.moment, params, table):
            cores.add(pid)
    edges = set()
    adj: dict[str, list[str]] = {pid: [] for pid in cores}
    for a in sorted(cores):
        for b, w in net.adj[a].items():
            if b in cores and w >= params.eps1 and a < b:
                edges.add((a, b))
                adj[a].append(b)
                adj[b].append(a)
    components = []
    seen: set[str] = set()
    for seed in sorted(cores):
        if seed in seen:
            continue
        frag = {seed}
        queue = deque([seed])
        while queue:
            node = queue.popleft()
            for nbr in adj[node]:
                if nbr not in frag:
                    frag.add(nbr)
                    queue.append(nbr)
        seen |= frag
        components.append(frozenset(frag))
    return SketchView(frozenset(cores), frozenset(edges), tuple(components))


class SketchGraph:
    """Incrementally maintained core subgraph with component labels."""

    def __init__(self, params: SimilarityParams):
        self.params = params
        self.cores: set[str] = set()
        self.adj: dict[str, set[str]] = {}
        self.comp_of: dict[str, int] = {}
        self.comps: dict[int, set[str]] = {}
        self._next_comp = 1
        # Lazy min-heap of (expiry_moment, post_id); stale entries are
        # re-validated against the live sum when popped.
        self._expiry: list[tuple[float, str]] = []

    # ------------------------------------------------------------------ #
    # stats / views

    def num_core(self) -> int:
        return len(self.cores)

    def num_core_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.adj.values()) // 2

    def num_components(self) -> int:
        return len(self.comps)

    def view(self) -> SketchView:
        edges = frozenset(
            (a, b) for a in self.adj for b in self.adj[a] if a < b
        )
        components = tuple(
            frozenset(members) for _, members in sorted(self.comps.items())
        )
        return SketchView(frozenset(self.cores), edges, components)

    # ------------------------------------------------------------------ #
    # expiry queue

    def refresh_expiry(self, net: PostNetwork, post_id: str) -> None:
        """Push a fresh expiry entry after a core post's sum changed.

        Gaps reaching past the window length are unreachable: the post will
        leave the window before it could decay below the core threshold, so
        no entry is needed (a later sum drop pushes a fresh one).
        """
        gap = expiry_gap(net.sums[post_id], self.params, net.decay_table)
        if gap >= net.window.window_len:
            return
        heapq.heappush(self._expiry, (net.posts[post_id].moment + gap, post_id))

    def _pop_decay_candidates(self, net: PostNetwork, t_next: int) -> list[str]:
        """Cores whose (re-validated) expiry falls before ``t_next``."""
        out = []
        while self._expiry and self._expiry[0][0] < t_next:
            _, pid = heapq.heappop(self._expiry)
            if pid not in self.cores or pid not in net.posts:
                continue
            try:
                gap = expiry_gap(net.sums[pid], self.params, net.decay_table)
            except NotCore:
                # Sum already collapsed (removal-touched); still a candidate.
                out.append(pid)
                continue
            true_expiry = net.posts[pid].moment + gap
            if true_expiry >= t_next:
                if gap < net.window.window_len:
                    heapq.heappush(self._expiry, (true_expiry, pid))
                continue
            out.append(pid)
        return out

    # ------------------------------------------------------------------ #
    # delta computation

    def compute_delta_sets(
        self,
        net: PostNetwork,
        delta: WindowDelta,
        removal_touched: set[str],
        add_contrib: dict[str, float],
    ) -> DeltaSets:
        """Classify overlap posts whose core status flips this tick.

        Call after the outgoing posts have been removed from ``net`` (so sums
        reflect the overlap-only graph) and before the incoming posts are
        added; ``add_contrib`` carries each overlap post's total edge weight
        to the incoming batch, from the linkage preview.
        """
        params = self.params
        table = net.decay_table
        t = delta.to_moment - delta.steps
        t_next = delta.to_moment

        promoted = set()
        demoted_removal = set()
        demoted_decay = set()

        candidates = {
            pid for pid in removal_touched if pid in self.cores and pid in net.posts
        }
        candidates.update(self._pop_decay_candidates(net, t_next))
        for pid in sorted(candidates):
            post = net.posts[pid]
            mid_sum = net.sums[pid]
            new_sum = mid_sum + add_contrib.get(pid, 0.0)
            if is_core_weight(new_sum, t_next - post.moment, params, table):
                continue  # survives the tick; expiry refreshed after additions
            if not is_core_weight(mid_sum, t - post.moment, params, table):
                demoted_removal.add(pid)
            else:
                demoted_decay.add(pid)

        for pid in sorted(add_contrib):
            if pid in self.cores or pid not in net.posts:
                continue
            post = net.posts[pid]
            new_sum = net.sums[pid] + add_contrib[pid]
            if is_core_weight(new_sum, t_next - post.moment, params, table):
                promoted.add(pid)

        return DeltaSets(
            promoted=frozenset(promoted),
            demoted_removal=frozenset(demoted_removal),
            demoted_decay=frozenset(demoted_decay),
        )

    # ------------------------------------------------------------------ #
    # incremental application

    def apply_delta(
        self,
        net: PostNetwork,
        expired_cores: set[str],
        delta_sets: DeltaSets,
        new_core_ids: set[str],
    ) -> list[ComponentEvent]:
        """Apply one tick's bulks: all deletions first, then all additions.

        Bulks are connected groups (within one category) of the affected
        posts; each bulk yields one component-level event.
        """
        events: list[ComponentEvent] = []
        deletions = (
            ("expired", expired_cores),
            ("demoted_removal", delta_sets.demoted_removal),
            ("demoted_decay", delta_sets.demoted_decay),
        )
        for category, ids in deletions:
            missing = [pid for pid in ids if pid not in self.cores]
            if missing:
                raise InconsistentDelta(f"{category} bulk references non-core {missing}")
            for bulk in self._connected_groups(ids, self._sketch_neighbors):
                events.append(self._remove_bulk(category, bulk))
        additions = (("new", new_core_ids), ("promoted", delta_sets.promoted))
        eps1 = self.params.eps1
        for category, ids in additions:
            bad = [pid for pid in ids if pid in self.cores or pid not in net.posts]
            if bad:
                raise InconsistentDelta(f"{category} bulk references {bad}")
            strong = {
                pid: [q for q, w in net.adj[pid].items() if w >= eps1] for pid in ids
            }
            for bulk in self._connected_groups(ids, strong.__getitem__):
                events.append(self._add_bulk(category, bulk, strong))
        return events

    def _sketch_neighbors(self, post_id: str):
        return self.adj.get(post_id, ())

    @staticmethod
    def _connected_groups(ids, neighbors_fn) -> list[tuple[str, ...]]:
        pending = set(ids)
        groups = []
        while pending:
            seed = min(pending)
            bulk = {seed}
            queue = deque([seed])
            while queue:
                node = queue.popleft()
                for nbr in neighbors_fn(node):
                    if nbr in pending and nbr not in bulk:
                        bulk.add(nbr)
                        queue.append(nbr)
            pending -= bulk
            groups.append(tuple(sorted(bulk)))
        return groups

    def _remove_bulk(self, category: str, bulk: tuple[str, ...]) -> ComponentEvent:
        bulk_set = set(bulk)
        comp = self.comp_of[bulk[0]]
        if any(self.comp_of[pid] != comp for pid in bulk):
            raise InconsistentState(f"deletion bulk {bulk} spans components")
        boundary = set()
        for pid in bulk:
            for nbr in self.adj[pid]:
                if nbr not in bulk_set:
                    boundary.add(nbr)
        for pid in bulk:
            for nbr in self.adj[pid]:
                if nbr not in bulk_set:
                    self.adj[nbr].discard(pid)
            del self.adj[pid]
            self.cores.discard(pid)
            del self.comp_of[pid]
            self.comps[comp].discard(pid)
        remaining = self.comps[comp]
        if not remaining:
            del self.comps[comp]
            return ComponentEvent("remove", category, bulk, comp)
        # Every remaining member is reachable from some former neighbor of
        # the bulk, so fragment discovery is bounded to this component.
        visited: set[str] = set()
        fragments: list[set[str]] = []
        for seed in sorted(boundary):
            if seed in visited or seed not in remaining:
                continue
            frag = {seed}
            queue = deque([seed])
            while queue:
                node = queue.popleft()
                for nbr in self.adj[node]:
                    if nbr not in frag:
                        frag.add(nbr)
                        queue.append(nbr)
            visited |= frag
            fragments.append(frag)
        if visited != remaining:
            raise InconsistentState(
                f"fragment search missed nodes in component {comp}"
            )
        if len(fragments) == 1:
            return ComponentEvent(
                "remove", category, bulk, comp,
                fragments=((comp, tuple(sorted(remaining))),),
            )
        del self.comps[comp]
        out = []
        for frag in sorted(fragments, key=min):
            cid = self._next_comp
            self._next_comp += 1
            self.comps[cid] = frag
            for member in frag:
                self.comp_of[member] = cid
            out.append((cid, tuple(sorted(frag))))
        return ComponentEvent("remove", category, bulk, comp, fragments=tuple(out))

    def _add_bulk(
        self, category: str, bulk: tuple[str, ...], strong: dict[str, list[str]]
    ) -> ComponentEvent:
        bulk_set = set(bulk)
        ext_comps: set[int] = set()
        edges: list[tuple[str, str]] = []
        for pid in bulk:
            for nbr in strong[pid]:
                if nbr in bulk_set:
                    if pid < nbr:
                        edges.append((pid, nbr))
                elif nbr in self.cores:
                    edges.append((pid, nbr))
                    ext_comps.add(self.comp_of[nbr])
        if not ext_comps:
            comp = self._next_comp
            self._next_comp += 1
            self.comps[comp] = set()
            absorbed: tuple[int, ...] = ()
            created = True
        elif len(ext_comps) == 1:
            comp = next(iter(ext_comps))
            absorbed = ()
            created = False
        else:
            comp = self._next_comp
            self._next_comp += 1
            self.comps[comp] = set()
            absorbed = tuple(sorted(ext_comps))
            created = True
            for old in absorbed:
                for member in self.comps[old]:
                    self.comp_of[member] = comp
                self.comps[comp] |= self.comps[old]
                del self.comps[old]
        for pid in bulk:
            self.cores.add(pid)
            self.comp_of[pid] = comp
            self.comps[comp].add(pid)
            self.adj[pid] = set()
        for a, b in edges:
            self.adj[a].add(b)
            self.adj[b].add(a)
        return ComponentEvent(
            "add", category, bulk, comp, absorbed=absorbed, created=created
        )

    # ------------------------------------------------------------------ #
    # serialization

    def state_dict(self) -> dict:
        return {
            "cores": sorted(self.cores),
            "edges": [
                [a, b] for a in sorted(self.adj) for b in sorted(self.adj[a]) if a < b
            ],
            "components": [
                [cid, sorted(members)] for cid, members in sorted(self.comps.items())
            ],
            "next_comp": self._next_comp,
        }

    @classmethod
    def from_state(cls, state: dict, params: SimilarityParams, net: PostNetwork) -> "SketchGraph":
        sketch = cls(params)
        sketch.cores = set(state["cores"])
        sketch.adj = {pid: set() for pid in sketch.cores}
        for a, b in state["edges"]:
            sketch.adj[a].add(b)
            sketch.adj[b].add(a)
        for cid, members in state["components"]:
            sketch.comps[cid] = set(members)
            for member in members:
                sketch.comp_of[member] = cid
        sketch._next_comp = state["next_comp"]
        # Expiry entries are derivable from live sums.
        for pid in sorted(sketch.cores):
            sketch.refresh_expiry(net, pid)
        return sketch
