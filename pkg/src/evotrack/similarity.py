"""Content similarity, time-decay functions, and the fading similarity measure.

All pair weights funnel through one float expression
(``hits / ((|L1| + |L2| - hits) * D)``) so that every code path that
evaluates the same pair produces bit-identical floats. Threshold tests on
accumulated weights go through :func:`quantize_weight`, which absorbs the
last-ulp drift between incremental bookkeeping and from-scratch summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidHitCount, NegativeGap

__all__ = [
    "DecayKind",
    "SimilarityParams",
    "jaccard",
    "decay",
    "fading_similarity",
    "fading_similarity_from_hits",
    "pair_weight",
    "quantize_weight",
]

# Quantization grain for threshold comparisons. Sums of pair weights are
# rationals; float accumulation order may differ between the incremental and
# the from-scratch path by a few ulp, which must not flip core decisions.
_QUANT = 1e12


class DecayKind(str, Enum):
    """Time-gap penalty shape. The gap x is measured in window moments."""

    RECIPROCAL = "reciprocal"  # D(x) = x + 1
    EXPONENTIAL = "exponential"  # D(x) = e^x
    NONE = "none"  # D(x) = 1


@dataclass(frozen=True)
class SimilarityParams:
    """Density parameters controlling edges, core edges and core posts.

    eps0: minimum fading similarity to create an edge, in (0, 1).
    eps1: minimum fading similarity for a core edge, eps1 >= eps0.
    delta1: minimum post weight for a core post, > 0.
    """

    decay: DecayKind = DecayKind.RECIPROCAL
    eps0: float = 0.2
    eps1: float = 0.5
    delta1: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.eps0 <= self.eps1 < 1.0):
            raise ValueError(
                f"need 0 < eps0 <= eps1 < 1, got eps0={self.eps0} eps1={self.eps1}"
            )
        if self.delta1 <= 0.0:
            raise ValueError(f"delta1 must be positive, got {self.delta1}")


def quantize_weight(x: float) -> float:
    """Snap a non-negative weight to the 1e-12 grid.

    Uses plain float ops (scale, floor, unscale) so numpy and pure-Python
    callers agree exactly.
    """
    return math.floor(x * _QUANT + 0.5) / _QUANT


def jaccard(left: frozenset | set, right: frozenset | set) -> float:
    """|L1 n L2| / |L1 u L2|; 0 when both sets are empty."""
    if not left and not right:
        return 0.0
    hits = len(left & right)
    return hits / (len(left) + len(right) - hits)


def decay(kind: DecayKind, dt: float) -> float:
    """Evaluate the decay function at gap ``dt`` (moments). Result >= 1."""
    if dt < 0:
        raise NegativeGap(f"negative time gap {dt}")
    if kind is DecayKind.RECIPROCAL:
        return dt + 1.0
    if kind is DecayKind.EXPONENTIAL:
        return math.exp(dt)
    return 1.0


def pair_weight(hits: int, size_a: int, size_b: int, d: float) -> float:
    """Canonical fading-similarity expression shared by every caller."""
    if hits == 0:
        return 0.0
    return hits / ((size_a + size_b - hits) * d)


def fading_similarity(post_a, post_b, params: SimilarityParams) -> float:
    """Content similarity divided by the decay of the moment gap.

    ``post_a`` / ``post_b`` expose ``entities`` (sets) and ``moment`` (int).
    """
    gap = abs(post_a.moment - post_b.moment)
    hits = len(post_a.entities & post_b.entities)
    if not post_a.entities and not post_b.entities:
        return 0.0
    return pair_weight(hits, len(post_a.entities), len(post_b.entities), decay(params.decay, gap))


def fading_similarity_from_hits(post_a, post_b, hits: int, params: SimilarityParams) -> float:
    """Fading similarity from a precounted entity hit count.

    Equals :func:`fading_similarity` exactly (same float expression).
    """
    floor_size = min(len(post_a.entities), len(post_b.entities))
    if hits < 0 or hits > floor_size:
        raise InvalidHitCount(f"hits={hits} exceeds min set size {floor_size}")
    gap = abs(post_a.moment - post_b.moment)
    return pair_weight(hits, len(post_a.entities), len(post_b.entities), decay(params.decay, gap))


@dataclass
class DecayTable:
    """Precomputed D values for integer gaps.

    Both the per-post and the vectorized linkage path read decay values from
    here, so exp() rounding differences between libm and numpy cannot leak
    into edge decisions.
    """

    kind: DecayKind
    _values: list[float] = field(default_factory=list, repr=False)

    def value(self, gap: int) -> float:
        if gap < 0:
            raise NegativeGap(f"negative time gap {gap}")
        while len(self._values) <= gap:
            self._values.append(decay(self.kind, len(self._values)))
        return self._values[gap]
