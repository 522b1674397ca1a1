"""Clusters, events/outliers, and the per-tick evolution op stream.

A cluster mirrors one sketch component plus the border posts adjacent to
its cores. Bulk deletions and additions coming out of the sketch update
drive the six evolution behaviors: a deleted bulk leaves zero, one or
several neighboring fragments (death / shrink / split); an added bulk
touches zero, one or several existing clusters (birth / grow / merge).
Grow and shrink keep the cluster id; merge and split assign fresh ids and
record lineage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InconsistentState
from .postnet import PostNetwork
from .sketch import ComponentEvent, SketchGraph
from .similarity import SimilarityParams

__all__ = [
    "Cluster",
    "EvolutionOp",
    "ClusterTracker",
    "classify_event",
    "gen_cluster",
    "neighboring_clusters",
]

OP_KINDS = ("birth", "death", "grow", "shrink", "merge", "split")


@dataclass
class Cluster:
    """One sketch component with its adjacent border posts."""

    id: int
    comp_id: int
    core: set[str]
    border: set[str]
    born_at: int
    lineage: dict | None = None

    def members(self) -> frozenset[str]:
        return frozenset(self.core) | frozenset(self.border)


@dataclass(frozen=True)
class EvolutionOp:
    """One evolution behavior observed at a tick."""

    t: int
    kind: str
    ids: tuple[int, ...]
    result_ids: tuple[int, ...]
    added: tuple[str, ...]
    removed: tuple[str, ...]
    size_before: int
    size_after: int
    is_event_before: bool
    is_event_after: bool
    lineage: dict | None = None
    annotation: tuple[tuple[str, float], ...] | None = None

    def to_record(self) -> dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "ids": list(self.ids),
            "result_ids": list(self.result_ids),
            "added": list(self.added),
            "removed": list(self.removed),
            "size_before": self.size_before,
            "size_after": self.size_after,
            "is_event_before": self.is_event_before,
            "is_event_after": self.is_event_after,
            "lineage": self.lineage,
            "annotation": [[e, s] for e, s in self.annotation]
            if self.annotation is not None
            else None,
        }


def classify_event(member_count: int, phi: int) -> bool:
    """True when the cluster is large enough to count as an event."""
    return member_count >= phi


def gen_cluster(
    sketch: SketchGraph, net: PostNetwork, component: set[str] | frozenset[str]
) -> tuple[frozenset[str], frozenset[str]]:
    """Core and border posts of the cluster generated from a component."""
    border = set()
    for pid in component:
        for nbr in net.adj.get(pid, ()):
            if nbr not in sketch.cores:
                border.add(nbr)
    return frozenset(component), frozenset(border)


def neighboring_clusters(
    tracker: "ClusterTracker",
    sketch: SketchGraph,
    net: PostNetwork,
    post_ids,
    params: SimilarityParams,
) -> set[int]:
    """Cluster ids owning core posts core-edge-adjacent to the given bulk."""
    bulk = set(post_ids)
    out = set()
    for pid in post_ids:
        for nbr, w in net.adj.get(pid, {}).items():
            if w >= params.eps1 and nbr in sketch.cores and nbr not in bulk:
                out.add(tracker.by_comp[sketch.comp_of[nbr]])
    return out


@dataclass
class _Skeleton:
    kind: str
    ids: tuple[int, ...]
    result_ids: tuple[int, ...]
    before_members: frozenset[str]
    lineage: dict | None = None


class ClusterTracker:
    """Owns the cluster set, stable ids, and op emission for each tick."""

    def __init__(self, phi: int):
        if phi < 1:
            raise ValueError(f"phi must be >= 1, got {phi}")
        self.phi = phi
        self.clusters: dict[int, Cluster] = {}
        self.by_comp: dict[int, int] = {}
        self._next_id = 1
        # Counter of primitive cluster operations, for the ordering study.
        self.primitive_ops = 0

    def _fresh_id(self) -> int:
        cid = self._next_id
        self._next_id += 1
        return cid

    def cluster_families(self) -> dict[frozenset[str], frozenset[str]]:
        """Core-set to border-set map, for partition comparisons."""
        return {
            frozenset(c.core): frozenset(c.border) for c in self.clusters.values()
        }

    def events(self) -> list[Cluster]:
        return [
            c
            for _, c in sorted(self.clusters.items())
            if classify_event(len(c.members()), self.phi)
        ]

    # ------------------------------------------------------------------ #
    # per-tick update

    def apply_tick(
        self,
        sketch: SketchGraph,
        net: PostNetwork,
        events: list[ComponentEvent],
        border_seeds: set[str],
        t_next: int,
    ) -> list[EvolutionOp]:
        """Consume the sketch's component events and emit this tick's ops.

        Deletion-phase events arrive before addition-phase events. Ops are
        emitted as: structural (death/split/birth/merge) in processing
        order, then per-id shrink/grow diffs for surviving clusters.
        """
        before: dict[int, frozenset[str]] = {
            cid: c.members() for cid, c in self.clusters.items()
        }
        provisional: dict[int, frozenset[str]] = {}
        skeletons: list[_Skeleton] = []
        affected: set[int] = set()

        def past_members(cid: int) -> frozenset[str]:
            if cid in before:
                return before[cid]
            return provisional.get(cid, frozenset())

        for ev in events:
            if ev.action == "remove":
                cid = self.by_comp.pop(ev.comp_id)
                if not ev.fragments:
                    cluster = self.clusters.pop(cid)
                    skeletons.append(
                        _Skeleton("death", (cid,), (), past_members(cid))
                    )
                    self.primitive_ops += 1
                elif len(ev.fragments) == 1:
                    # Plain shrink; the op materializes in the per-id diff.
                    self.by_comp[ev.comp_id] = cid
                    affected.add(cid)
                else:
                    source = self.clusters.pop(cid)
                    result_ids = []
                    for comp_id, members in ev.fragments:
                        new_id = self._fresh_id()
                        self.clusters[new_id] = Cluster(
                            id=new_id,
                            comp_id=comp_id,
                            core=set(members),
                            border=set(),
                            born_at=t_next,
                            lineage={"parent": cid},
                        )
                        self.by_comp[comp_id] = new_id
                        result_ids.append(new_id)
                        affected.add(new_id)
                    skeletons.append(
                        _Skeleton(
                            "split",
                            (cid,),
                            tuple(result_ids),
                            past_members(cid),
                            lineage={"parent": cid},
                        )
                    )
                    self.primitive_ops += 1 + len(result_ids)
            else:  # add
                if ev.absorbed:
                    parents = sorted(self.by_comp.pop(k) for k in ev.absorbed)
                    merged_before = frozenset().union(
                        *(past_members(p) for p in parents)
                    )
                    for pid in parents:
                        self.clusters.pop(pid, None)
                    new_id = self._fresh_id()
                    self.clusters[new_id] = Cluster(
                        id=new_id,
                        comp_id=ev.comp_id,
                        core=set(),
                        border=set(),
                        born_at=t_next,
                        lineage={"parents": parents},
                    )
                    self.by_comp[ev.comp_id] = new_id
                    provisional[new_id] = merged_before | frozenset(ev.bulk)
                    skeletons.append(
                        _Skeleton(
                            "merge",
                            tuple(parents),
                            (new_id,),
                            merged_before,
                            lineage={"parents": parents},
                        )
                    )
                    self.primitive_ops += 1 + len(parents)
                    affected.add(new_id)
                elif ev.created:
                    new_id = self._fresh_id()
                    self.clusters[new_id] = Cluster(
                        id=new_id,
                        comp_id=ev.comp_id,
                        core=set(),
                        border=set(),
                        born_at=t_next,
                    )
                    self.by_comp[ev.comp_id] = new_id
                    provisional[new_id] = frozenset(ev.bulk)
                    skeletons.append(
                        _Skeleton("birth", (new_id,), (new_id,), frozenset())
                    )
                    self.primitive_ops += 1
                    affected.add(new_id)
                else:
                    # Plain growth; the op materializes in the per-id diff.
                    affected.add(self.by_comp[ev.comp_id])

        self._sync_cores(sketch)
        for seed in border_seeds:
            if seed in sketch.cores:
                affected.add(self.by_comp[sketch.comp_of[seed]])
        self._recompute_borders(net, sketch, affected)

        return self._assemble_ops(before, provisional, skeletons, t_next)

    def _sync_cores(self, sketch: SketchGraph) -> None:
        if set(self.by_comp) != set(sketch.comps):
            raise InconsistentState("cluster/component bookkeeping diverged")
        for comp_id, members in sketch.comps.items():
            self.clusters[self.by_comp[comp_id]].core = set(members)

    def _recompute_borders(
        self, net: PostNetwork, sketch: SketchGraph, affected: set[int]
    ) -> None:
        cores = sketch.cores
        for cid in affected:
            cluster = self.clusters.get(cid)
            if cluster is None:
                continue
            nbrs: set[str] = set()
            for pid in cluster.core:
                nbrs.update(net.adj[pid])
            cluster.border = nbrs - cores

    def _assemble_ops(
        self,
        before: dict[int, frozenset[str]],
        provisional: dict[int, frozenset[str]],
        skeletons: list[_Skeleton],
        t_next: int,
    ) -> list[EvolutionOp]:
        phi = self.phi

        def now_members(cid: int) -> frozenset[str]:
            cluster = self.clusters.get(cid)
            if cluster is not None:
                return cluster.members()
            return provisional.get(cid, frozenset())

        ops: list[EvolutionOp] = []
        for skel in skeletons:
            after_union = frozenset().union(
                *(now_members(rid) for rid in skel.result_ids)
            ) if skel.result_ids else frozenset()
            size_before = len(skel.before_members)
            size_after = len(after_union)
            ops.append(
                EvolutionOp(
                    t=t_next,
                    kind=skel.kind,
                    ids=skel.ids,
                    result_ids=skel.result_ids,
                    added=tuple(sorted(after_union - skel.before_members)),
                    removed=tuple(sorted(skel.before_members - after_union)),
                    size_before=size_before,
                    size_after=size_after,
                    is_event_before=classify_event(size_before, phi),
                    is_event_after=classify_event(size_after, phi),
                    lineage=skel.lineage,
                )
            )

        for cid in sorted(before):
            cluster = self.clusters.get(cid)
            if cluster is None:
                continue  # consumed by a structural op above
            old = before[cid]
            new = cluster.members()
            if old == new:
                continue
            removed = tuple(sorted(old - new))
            added = tuple(sorted(new - old))
            common = dict(
                t=t_next,
                ids=(cid,),
                result_ids=(cid,),
                lineage=None,
            )
            if removed:
                ops.append(
                    EvolutionOp(
                        kind="shrink",
                        added=(),
                        removed=removed,
                        size_before=len(old),
                        size_after=len(old) - len(removed),
                        is_event_before=classify_event(len(old), phi),
                        is_event_after=classify_event(len(old) - len(removed), phi),
                        **common,
                    )
                )
                self.primitive_ops += 1
            if added:
                ops.append(
                    EvolutionOp(
                        kind="grow",
                        added=added,
                        removed=(),
                        size_before=len(new) - len(added),
                        size_after=len(new),
                        is_event_before=classify_event(len(new) - len(added), phi),
                        is_event_after=classify_event(len(new), phi),
                        **common,
                    )
                )
                self.primitive_ops += 1
        return ops

    # ------------------------------------------------------------------ #
    # serialization

    def state_dict(self) -> dict:
        return {
            "phi": self.phi,
            "next_id": self._next_id,
            "clusters": [
                {
                    "id": c.id,
                    "comp_id": c.comp_id,
                    "core": sorted(c.core),
                    "border": sorted(c.border),
                    "born_at": c.born_at,
                    "lineage": c.lineage,
                }
                for _, c in sorted(self.clusters.items())
            ],
        }

    @classmethod
    def from_state(cls, state: dict) -> "ClusterTracker":
        tracker = cls(phi=state["phi"])
        tracker._next_id = state["next_id"]
        for item in state["clusters"]:
            cluster = Cluster(
                id=item["id"],
                comp_id=item["comp_id"],
                core=set(item["core"]),
                border=set(item["border"]),
                born_at=item["born_at"],
                lineage=item["lineage"],
            )
            tracker.clusters[cluster.id] = cluster
            tracker.by_comp[cluster.comp_id] = cluster.id
        return tracker
