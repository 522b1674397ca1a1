import json

import pytest

from evotrack.config import EngineConfig
from evotrack.engine import Engine
from evotrack.errors import CorruptSnapshot, VersionMismatch
from evotrack.snapshot import load_snapshot, read_header, save_snapshot

from conftest import random_stream


def _engine_after(stream, config, upto):
    engine = Engine(config)
    engine.ensure_started(stream[0][0])
    ops = []
    for moment, batch in stream:
        if moment > upto:
            break
        ops.extend(op.to_record() for op in engine.tick(batch).ops)
    return engine, ops


def test_roundtrip_preserves_observable_state(tmp_path):
    config = EngineConfig(window_len=5, phi=4)
    stream = random_stream(13, moments=10)
    engine, _ = _engine_after(stream, config, upto=10)
    path = tmp_path / "state.snap"
    save_snapshot(engine, path)
    restored = load_snapshot(path)
    assert restored.state_dict() == engine.state_dict()
    assert restored.tracker.cluster_families() == engine.tracker.cluster_families()


def test_resume_equals_uninterrupted_run(tmp_path):
    config = EngineConfig(window_len=5, phi=4)
    stream = random_stream(29, moments=14)
    full_engine, full_ops = _engine_after(stream, config, upto=14)

    half_engine, first_ops = _engine_after(stream, config, upto=7)
    path = tmp_path / "mid.snap"
    save_snapshot(half_engine, path)
    resumed = load_snapshot(path)
    tail_ops = []
    for moment, batch in stream:
        if moment <= 7:
            continue
        tail_ops.extend(op.to_record() for op in resumed.tick(batch).ops)
    assert first_ops + tail_ops == full_ops
    assert resumed.tracker.cluster_families() == full_engine.tracker.cluster_families()


def test_header_summary(tmp_path):
    config = EngineConfig(window_len=5)
    stream = random_stream(3, moments=6)
    engine, _ = _engine_after(stream, config, upto=6)
    path = tmp_path / "s.snap"
    save_snapshot(engine, path)
    header = read_header(path)
    assert header["now"] == 6
    assert header["num_posts"] == len(engine.net)
    assert header["config"]["window_len"] == 5


def test_truncated_snapshot_is_corrupt(tmp_path):
    config = EngineConfig(window_len=5)
    stream = random_stream(3, moments=4)
    engine, _ = _engine_after(stream, config, upto=4)
    path = tmp_path / "t.snap"
    save_snapshot(engine, path)
    data = path.read_text()
    path.write_text(data[: len(data) // 2])
    with pytest.raises(CorruptSnapshot):
        load_snapshot(path)


def test_tampered_snapshot_is_corrupt(tmp_path):
    config = EngineConfig(window_len=5)
    stream = random_stream(3, moments=4)
    engine, _ = _engine_after(stream, config, upto=4)
    path = tmp_path / "t.snap"
    save_snapshot(engine, path)
    doc = json.loads(path.read_text())
    doc["state"]["network"]["now"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptSnapshot):
        load_snapshot(path)


def test_version_mismatch(tmp_path):
    config = EngineConfig(window_len=5)
    stream = random_stream(3, moments=4)
    engine, _ = _engine_after(stream, config, upto=4)
    path = tmp_path / "v.snap"
    save_snapshot(engine, path)
    doc = json.loads(path.read_text())
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(VersionMismatch):
        load_snapshot(path)


def test_not_a_snapshot(tmp_path):
    path = tmp_path / "x.snap"
    path.write_text('{"something": "else"}')
    with pytest.raises(CorruptSnapshot):
        read_header(path)
