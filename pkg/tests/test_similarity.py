import math
import random

import pytest

from evotrack.errors import InvalidHitCount, NegativeGap
from evotrack.ingest import Post
from evotrack.similarity import (
    DecayKind,
    DecayTable,
    SimilarityParams,
    decay,
    fading_similarity,
    fading_similarity_from_hits,
    jaccard,
    quantize_weight,
)


def post(pid, entities, moment):
    return Post(pid, frozenset(entities), moment, moment=moment)


def test_jaccard_basics():
    assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3, abs=1e-12)
    assert jaccard({"a", "b"}, {"a", "b"}) == 1.0
    assert jaccard({"a"}, {"b"}) == 0.0
    assert jaccard(set(), set()) == 0.0


def test_decay_values():
    assert decay(DecayKind.RECIPROCAL, 0) == 1.0
    assert decay(DecayKind.EXPONENTIAL, 1) == pytest.approx(math.e, abs=1e-12)
    assert decay(DecayKind.NONE, 7) == 1.0
    with pytest.raises(NegativeGap):
        decay(DecayKind.RECIPROCAL, -1)


@pytest.mark.parametrize("kind", list(DecayKind))
def test_decay_monotone_and_at_least_one(kind):
    prev = 0.0
    for gap in range(0, 12):
        value = decay(kind, gap)
        assert value >= 1.0
        assert value >= prev
        prev = value


def test_fading_similarity_examples():
    params = SimilarityParams(decay=DecayKind.RECIPROCAL)
    p = post("p", {"a", "b"}, 0)
    q0 = post("q0", {"b", "c"}, 0)
    q1 = post("q1", {"b", "c"}, 1)
    assert fading_similarity(p, q0, params) == pytest.approx(1 / 3, abs=1e-12)
    assert fading_similarity(p, q1, params) == pytest.approx(1 / 6, abs=1e-12)
    exp = SimilarityParams(decay=DecayKind.EXPONENTIAL)
    assert fading_similarity(p, q1, exp) == pytest.approx(1 / (3 * math.e), abs=1e-9)


def test_from_hits_examples():
    params = SimilarityParams(decay=DecayKind.RECIPROCAL)
    p = post("p", {"a", "b"}, 0)
    q = post("q", {"b", "c"}, 0)
    assert fading_similarity_from_hits(p, q, 1, params) == pytest.approx(1 / 3)
    assert fading_similarity_from_hits(p, q, 0, params) == 0.0
    p3 = post("p3", {"a", "b", "c"}, 0)
    q4 = post("q4", {"c", "d", "e", "f"}, 1)
    assert fading_similarity_from_hits(p3, q4, 2, params) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(InvalidHitCount):
        fading_similarity_from_hits(p, q, 3, params)


def _random_pair(rng):
    universe = [f"e{i}" for i in range(12)]
    a = frozenset(rng.sample(universe, rng.randint(1, 8)))
    b = frozenset(rng.sample(universe, rng.randint(1, 8)))
    return (
        post("a", a, rng.randint(0, 6)),
        post("b", b, rng.randint(0, 6)),
    )


@pytest.mark.parametrize("kind", list(DecayKind))
def test_symmetry_and_range(kind):
    rng = random.Random(17)
    params = SimilarityParams(decay=kind)
    for _ in range(500):
        p, q = _random_pair(rng)
        s_pq = fading_similarity(p, q, params)
        assert s_pq == fading_similarity(q, p, params)
        assert 0.0 <= s_pq <= 1.0


def test_from_hits_agreement():
    rng = random.Random(23)
    for kind in DecayKind:
        params = SimilarityParams(decay=kind)
        for _ in range(500):
            p, q = _random_pair(rng)
            hits = len(p.entities & q.entities)
            direct = fading_similarity(p, q, params)
            via_hits = fading_similarity_from_hits(p, q, hits, params)
            assert abs(direct - via_hits) <= 1e-12


def test_decay_dominance_across_kinds():
    rng = random.Random(5)
    p_none = SimilarityParams(decay=DecayKind.NONE)
    p_reci = SimilarityParams(decay=DecayKind.RECIPROCAL)
    p_exp = SimilarityParams(decay=DecayKind.EXPONENTIAL)
    for _ in range(300):
        p, q = _random_pair(rng)
        s_exp = fading_similarity(p, q, p_exp)
        s_reci = fading_similarity(p, q, p_reci)
        s_none = fading_similarity(p, q, p_none)
        assert s_exp <= s_reci <= s_none
    # fixed content, growing gap: non-increasing
    for kind in DecayKind:
        params = SimilarityParams(decay=kind)
        prev = 1.0
        for gap in range(0, 8):
            a = post("a", {"x", "y"}, 0)
            b = post("b", {"y", "z"}, gap)
            value = fading_similarity(a, b, params)
            assert value <= prev + 1e-15
            prev = value


def test_params_validation():
    with pytest.raises(ValueError):
        SimilarityParams(eps0=0.6, eps1=0.5)
    with pytest.raises(ValueError):
        SimilarityParams(eps0=0.0)
    with pytest.raises(ValueError):
        SimilarityParams(delta1=0.0)


def test_quantize_weight_snaps_drift():
    exact = 0.5
    drifted = exact - 3e-16
    assert quantize_weight(drifted) == quantize_weight(exact) == 0.5


def test_decay_table_matches_function():
    for kind in DecayKind:
        table = DecayTable(kind)
        for gap in range(0, 15):
            assert table.value(gap) == decay(kind, gap)
