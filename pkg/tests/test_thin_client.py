"""End-to-end: the track subcommand as a thin client of a live service."""

import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def server():
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "evotrack", "serve", "--port", str(port)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(f"{base}/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.1)
        else:
            raise RuntimeError("service did not come up")
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def _run(args, stdin_text=None):
    return subprocess.run(
        [sys.executable, "-m", "evotrack", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
    )


def test_thin_client_track_matches_local_run(server, tmp_path):
    stream_path = tmp_path / "s.ndjson"
    proc = _run(["synth", "--preset", "basic", "--seed", "11", "--out", str(stream_path)])
    assert proc.returncode == 0

    local = _run(["track", "-i", str(stream_path), "--window-len", "5", "--no-annotate"])
    remote = _run(
        [
            "track",
            "-i",
            str(stream_path),
            "--window-len",
            "5",
            "--no-annotate",
            "--server",
            server,
        ]
    )
    assert local.returncode == 0 and remote.returncode == 0

    local_ops = [json.loads(line) for line in local.stdout.splitlines()]
    remote_ops = [json.loads(line) for line in remote.stdout.splitlines()]
    assert remote_ops == local_ops

    report = httpx.get(f"{server}/report", timeout=5.0).json()
    assert report["ticks"] >= 12
