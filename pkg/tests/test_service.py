import pytest
from fastapi.testclient import TestClient

from evotrack.config import EngineConfig
from evotrack.engine import Engine
from evotrack.service import create_app


@pytest.fixture
def client():
    app = create_app(Engine(EngineConfig(window_len=5, phi=3, annotate_ops=False)))
    with TestClient(app) as client:
        yield client


def _records(moment, count, vocab=("x", "y")):
    return [
        {
            "id": f"m{moment}p{i}",
            "timestamp": moment,
            "author": "a",
            "entities": list(vocab),
        }
        for i in range(count)
    ]


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_engine_status_and_reset(client):
    status = client.get("/engine").json()
    assert status["started"] is False
    assert status["config"]["window_len"] == 5
    reset = client.post("/engine", json={"window_len": 7, "phi": 2})
    assert reset.status_code == 200
    assert reset.json()["config"]["window_len"] == 7


def test_engine_reset_rejects_bad_config(client):
    response = client.post("/engine", json={"eps0": 0.9, "eps1": 0.5})
    assert response.status_code == 422


def test_tick_flow_ops_and_clusters(client):
    response = client.post("/ticks", json={"records": _records(1, 4)})
    assert response.status_code == 200
    payload = response.json()
    assert payload["now"] == 1
    assert payload["ticks"] == 1
    assert [op["kind"] for op in payload["ops"]] == ["birth"]
    clusters = client.get("/clusters").json()
    assert len(clusters) == 1
    assert clusters[0]["size"] == 4
    assert clusters[0]["is_event"] is True
    events = client.get("/clusters", params={"events_only": True}).json()
    assert len(events) == 1


def test_tick_gap_moments_and_run_to(client):
    client.post("/ticks", json={"records": _records(1, 3)})
    response = client.post("/ticks", json={"records": _records(4, 2)})
    assert response.json()["ticks"] == 3  # moments 2, 3, 4
    response = client.post("/ticks", json={"records": [], "run_to": 9})
    payload = response.json()
    assert payload["now"] == 9
    kinds = [op["kind"] for op in payload["ops"]]
    assert "death" in kinds  # everything expired by t=9


def test_tick_skips_stale_records(client):
    client.post("/ticks", json={"records": _records(3, 2)})
    response = client.post(
        "/ticks", json={"records": _records(1, 2) + _records(4, 1)}
    )
    assert response.status_code == 200
    assert response.json()["skipped"] == 2


def test_tick_rejects_empty_request(client):
    response = client.post("/ticks", json={"records": []})
    assert response.status_code == 422


def test_annotation_endpoint(client):
    client.post("/ticks", json={"records": _records(1, 3)})
    clusters = client.get("/clusters").json()
    cid = clusters[0]["id"]
    response = client.get(f"/clusters/{cid}/annotation", params={"top_k": 1})
    assert response.status_code == 200
    payload = response.json()
    assert payload["cluster_id"] == cid
    assert len(payload["entries"]) == 1
    assert payload["entries"][0][0] in {"x", "y"}
    assert client.get("/clusters/999/annotation").status_code == 404


def test_report_accumulates(client):
    client.post("/ticks", json={"records": _records(1, 2)})
    client.post("/ticks", json={"records": _records(2, 2)})
    report = client.get("/report").json()
    assert report["ticks"] == 2
    assert report["posts_in"] == 4


def test_snapshot_roundtrip_via_api(client, tmp_path):
    client.post("/ticks", json={"records": _records(1, 4)})
    path = str(tmp_path / "svc.snap")
    saved = client.post("/snapshot/save", json={"path": path})
    assert saved.status_code == 200
    assert saved.json()["header"]["num_posts"] == 4
    client.post("/ticks", json={"records": _records(2, 1)})
    restored = client.post("/snapshot/load", json={"path": path})
    assert restored.status_code == 200
    assert restored.json()["now"] == 1
    assert restored.json()["num_posts"] == 4


def test_snapshot_load_missing_file(client, tmp_path):
    response = client.post(
        "/snapshot/load", json={"path": str(tmp_path / "missing.snap")}
    )
    assert response.status_code == 422
