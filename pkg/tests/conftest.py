"""Shared fixtures and helpers for engine-vs-oracle comparisons."""

from __future__ import annotations

import random

import pytest

from evotrack.config import EngineConfig
from evotrack.engine import Engine
from evotrack.evaluation.oracle import cluster_family, oracle_tick
from evotrack.ingest import Post


def make_post(pid: str, entities, moment: int) -> Post:
    return Post(pid, frozenset(entities), moment, moment=moment)


def random_stream(
    seed: int,
    moments: int = 20,
    n_clusters: int = 5,
    max_posts: int = 5,
    bridge_chance: float = 0.3,
) -> list[tuple[int, list[Post]]]:
    """Clustered posts with occasional cross-cluster bridges and noise."""
    rng = random.Random(seed)
    vocabs = [
        [f"v{c}e{i}" for i in range(rng.randint(3, 6))] for c in range(n_clusters)
    ]
    stream = []
    for m in range(1, moments + 1):
        batch = []
        for c, vocab in enumerate(vocabs):
            if rng.random() < 0.8:
                for i in range(rng.randint(0, max_posts)):
                    k = rng.randint(2, len(vocab))
                    batch.append(
                        Post(f"m{m:03d}c{c}p{i}", frozenset(rng.sample(vocab, k)), m)
                    )
        if rng.random() < bridge_chance:
            va, vb = rng.sample(vocabs, 2)
            batch.append(Post(f"m{m:03d}bridge", frozenset(va + vb), m))
        for i in range(rng.randint(0, 2)):
            batch.append(Post(f"m{m:03d}n{i}", frozenset([f"x{m}-{i}"]), m))
        stream.append((m, batch))
    return stream


def run_equivalence(
    config: EngineConfig, stream: list[tuple[int, list[Post]]]
) -> list[dict]:
    """Drive an engine tick by tick, comparing against the oracle each tick.

    Returns one record per tick with the engine result, the oracle family,
    and the in-window posts, for further assertions. Raises on the first
    partition mismatch.
    """
    engine = Engine(config)
    params = config.similarity_params()
    engine.ensure_started(stream[0][0])
    window: dict[int, list[Post]] = {}
    out = []
    for moment, batch in stream:
        result = engine.tick(batch, want_trace=True)
        window[moment] = [p.at_moment(moment) for p in batch]
        in_window = [
            p
            for mm, posts in window.items()
            if mm > moment - config.window_len
            for p in posts
        ]
        expected = cluster_family(oracle_tick(in_window, moment, params))
        got = engine.tracker.cluster_families()
        assert expected == got, f"partition mismatch at t={moment}"
        out.append(
            {
                "t": moment,
                "engine": engine,
                "result": result,
                "in_window": in_window,
                "family": expected,
            }
        )
    return out


@pytest.fixture
def default_params():
    return EngineConfig().similarity_params()
