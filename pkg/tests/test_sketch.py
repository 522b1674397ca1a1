import math
import random

import pytest

from evotrack.config import EngineConfig
from evotrack.engine import Engine
from evotrack.errors import FutureQuery, NotCore
from evotrack.ingest import Post
from evotrack.postnet import PostNetwork, WindowConfig
from evotrack.sketch import (
    NodeType,
    classify_node,
    core_expiry,
    post_weight,
    rebuild_sketch,
)
from evotrack.similarity import DecayKind, SimilarityParams

from conftest import make_post, random_stream


def small_net(posts, params=None, window_len=5):
    params = params or SimilarityParams()
    net = PostNetwork(params, WindowConfig(window_len=window_len))
    for post in posts:
        net.add_post(post)
    return net


def test_post_weight_examples():
    params = SimilarityParams(decay=DecayKind.RECIPROCAL)
    net = small_net(
        [make_post("p", {"a", "b", "c"}, 0), make_post("q", {"a", "b"}, 0)], params
    )
    # J = 2/3; sum for p is 2/3
    assert post_weight(net, "p", 0) == pytest.approx(2 / 3)
    assert post_weight(net, "p", 1) == pytest.approx(1 / 3)
    net.add_post(make_post("lone", {"zz"}, 0))
    assert post_weight(net, "lone", 3) == 0.0
    with pytest.raises(FutureQuery):
        post_weight(net, "p", -1)


def test_classify_node_examples():
    params = SimilarityParams(delta1=0.5)
    # two identical posts: w = 1.0 at their own moment -> both core
    net = small_net([make_post("a", {"x", "y"}, 0), make_post("b", {"x", "y"}, 0)], params)
    assert classify_node(net, "a", 0, params) is NodeType.CORE
    # border: sub-threshold weight (2 * 0.2 = 0.4) next to core posts
    net.add_post(make_post("d", {"y", "q", "r", "s"}, 0))
    assert classify_node(net, "d", 0, params) is NodeType.BORDER
    lone = small_net([make_post("z", {"only"}, 0)], params)
    assert classify_node(lone, "z", 0, params) is NodeType.NOISE


def test_core_expiry_examples():
    params = SimilarityParams(decay=DecayKind.RECIPROCAL, delta1=0.5)
    net = PostNetwork(params, WindowConfig(window_len=5))
    net.add_post(make_post("p", {"a", "b"}, 0))
    net.add_post(make_post("q", {"a", "b"}, 0))
    # sum = 1.0: w(1) = 0.5 >= delta1, w(2) = 1/3 < delta1
    assert core_expiry(net, "p", params) == 1

    exact = SimilarityParams(decay=DecayKind.RECIPROCAL, delta1=1.0)
    assert core_expiry(net, "p", exact) == 0  # s == delta1 exactly

    none_params = SimilarityParams(decay=DecayKind.NONE, delta1=0.5)
    none_net = PostNetwork(none_params, WindowConfig(window_len=5))
    none_net.add_post(make_post("p", {"a", "b"}, 0))
    none_net.add_post(make_post("q", {"a", "b"}, 0))
    assert core_expiry(none_net, "p", none_params) == math.inf

    with pytest.raises(NotCore):
        weak = SimilarityParams(delta1=2.0)
        core_expiry(net, "p", weak)


def test_core_expiry_exponential():
    params = SimilarityParams(decay=DecayKind.EXPONENTIAL, delta1=0.5)
    net = PostNetwork(params, WindowConfig(window_len=5))
    for pid in ("a", "b", "c", "d"):
        net.add_post(make_post(pid, {"x", "y"}, 0))
    # sum = 3.0: 3/e ~ 1.10 >= 0.5, 3/e^2 ~ 0.406 < 0.5
    assert core_expiry(net, "a", params) == 1


def test_rebuild_sketch_triangle_single_component():
    params = SimilarityParams()
    net = small_net([make_post(pid, {"a", "b"}, 0) for pid in "pqr"], params)
    view = rebuild_sketch(net, 0, params)
    assert view.cores == {"p", "q", "r"}
    assert view.partition() == {frozenset({"p", "q", "r"})}


def test_rebuild_sketch_weak_edge_two_singletons():
    params = SimilarityParams(eps0=0.2, eps1=0.5, delta1=0.25)
    net = small_net(
        [make_post("p", {"a", "b"}, 0), make_post("q", {"b", "c"}, 0)], params
    )
    view = rebuild_sketch(net, 0, params)
    assert view.cores == {"p", "q"}  # J = 1/3 >= delta1
    assert view.edges == frozenset()  # 1/3 < eps1
    assert view.partition() == {frozenset({"p"}), frozenset({"q"})}


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return {frozenset(v) for v in out.values()}


def _union_find_partition(net, t, params):
    view_cores = {
        pid
        for pid in net.posts
        if classify_node(net, pid, t, params) is NodeType.CORE
    }
    uf = _UnionFind(view_cores)
    for a in view_cores:
        for b, w in net.adj[a].items():
            if b in view_cores and w >= params.eps1:
                uf.union(a, b)
    return uf.groups()


@pytest.mark.parametrize("seed", range(4))
def test_rebuild_components_match_union_find(seed):
    rng = random.Random(seed)
    params = SimilarityParams(eps0=0.2, eps1=0.4, delta1=0.4)
    vocab = [f"w{i}" for i in range(9)]
    posts = [
        make_post(f"p{i:02d}", rng.sample(vocab, rng.randint(1, 4)), rng.randint(0, 3))
        for i in range(50)
    ]
    net = small_net(posts, params)
    view = rebuild_sketch(net, 3, params)
    assert view.partition() == _union_find_partition(net, 3, params)


def _drive(config, batches):
    engine = Engine(config)
    engine.ensure_started(1)
    results = []
    for batch in batches:
        results.append(engine.tick(batch, want_trace=True))
    return engine, results


def test_delta_set_demoted_removal():
    # p stays core only through its neighbor n; when n expires, p drops.
    config = EngineConfig(window_len=3, decay="none", phi=10, annotate_ops=False)
    batches = [
        [Post("n", frozenset({"a", "b"}), 1)],
        [Post("p", frozenset({"a", "b"}), 2)],
        [],
        [],  # t=4: n expires
    ]
    engine, results = _drive(config, batches)
    trace = results[3].trace
    assert trace.expired_cores == {"n"}
    assert trace.delta_sets.demoted_removal == {"p"}
    assert trace.delta_sets.demoted_decay == frozenset()
    assert trace.delta_sets.promoted == frozenset()


def test_delta_set_demoted_decay():
    config = EngineConfig(window_len=5, decay="reciprocal", phi=10, annotate_ops=False)
    batches = [
        [Post("p", frozenset({"a", "b"}), 1), Post("q", frozenset({"a", "b"}), 1)],
        [],  # t=2: w = 0.5, still core
        [],  # t=3: w = 1/3, decayed below delta1
    ]
    engine, results = _drive(config, batches)
    trace = results[2].trace
    assert trace.delta_sets.demoted_decay == {"p", "q"}
    assert trace.delta_sets.demoted_removal == frozenset()


def test_delta_set_promoted():
    config = EngineConfig(window_len=5, decay="none", phi=10, annotate_ops=False)
    batches = [
        [Post("p", frozenset({"a", "b"}), 1)],  # noise at birth
        [Post("r", frozenset({"a", "b"}), 2)],  # gives p weight 1.0
    ]
    engine, results = _drive(config, batches)
    trace = results[1].trace
    assert trace.delta_sets.promoted == {"p"}
    assert trace.new_core_ids == {"r"}


def test_apply_delta_empty_tick_changes_nothing():
    config = EngineConfig(window_len=5, decay="none", phi=10, annotate_ops=False)
    batches = [
        [Post(f"p{i}", frozenset({"a", "b"}), 1) for i in range(3)],
        [],
    ]
    engine, results = _drive(config, batches)
    assert results[1].ops == []
    assert engine.sketch.num_components() == 1


@pytest.mark.parametrize("seed", [0, 1])
@pytest.mark.parametrize("decay", ["reciprocal", "none"])
def test_incremental_sketch_matches_rebuild_and_union_find(seed, decay):
    config = EngineConfig(
        window_len=5, decay=decay, eps0=0.2, eps1=0.4, delta1=0.5, annotate_ops=False
    )
    params = config.similarity_params()
    engine = Engine(config)
    engine.ensure_started(1)
    for moment, batch in random_stream(seed, moments=15):
        engine.tick(batch)
        view = rebuild_sketch(engine.net, moment, params)
        incremental = engine.sketch.view()
        assert incremental.cores == view.cores
        assert incremental.edges == view.edges
        assert incremental.partition() == view.partition()
        assert incremental.partition() == _union_find_partition(
            engine.net, moment, params
        )


def test_density_monotonicity_on_fixed_network():
    rng = random.Random(12)
    vocab = [f"w{i}" for i in range(8)]
    posts = [
        make_post(f"p{i:02d}", rng.sample(vocab, rng.randint(2, 5)), rng.randint(0, 2))
        for i in range(60)
    ]
    prev_cores, prev_edges = None, None
    for threshold in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8):
        params = SimilarityParams(eps0=0.2, eps1=threshold, delta1=threshold)
        net = small_net(posts, params)
        view = rebuild_sketch(net, 2, params)
        if prev_cores is not None:
            assert len(view.cores) <= prev_cores
            assert len(view.edges) <= prev_edges
        prev_cores, prev_edges = len(view.cores), len(view.edges)
