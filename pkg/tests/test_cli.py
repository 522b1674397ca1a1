import json
import subprocess
import sys
from pathlib import Path

import pytest

from evotrack.cli import main


def run_cli(args, stdin_text=None):
    proc = subprocess.run(
        [sys.executable, "-m", "evotrack", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
    )
    return proc


@pytest.fixture(scope="module")
def basic_stream(tmp_path_factory):
    path = tmp_path_factory.mktemp("streams") / "basic.ndjson"
    proc = run_cli(["synth", "--preset", "basic", "--seed", "5", "--out", str(path)])
    assert proc.returncode == 0
    return path


def test_track_runs_and_reports(basic_stream, tmp_path):
    report_path = tmp_path / "report.json"
    proc = run_cli(
        [
            "track",
            "-i",
            str(basic_stream),
            "--window-len",
            "5",
            "--report",
            str(report_path),
        ]
    )
    assert proc.returncode == 0
    ops = [json.loads(line) for line in proc.stdout.splitlines()]
    assert ops and ops[0]["kind"] == "birth"
    report = json.loads(report_path.read_text())
    assert report["config"]["delta1"] == 0.5
    assert report["config"]["eps0"] == 0.2
    assert report["config"]["eps1"] == 0.5
    assert report["config"]["phi"] == 10
    assert report["ticks"] == 12


def test_track_deterministic_bytes(basic_stream):
    args = ["track", "-i", str(basic_stream), "--window-len", "5"]
    first = run_cli(args)
    second = run_cli(args)
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout


def test_track_reads_stdin(basic_stream):
    text = Path(basic_stream).read_text()
    proc = run_cli(["track", "-i", "-", "--window-len", "5"], stdin_text=text)
    assert proc.returncode == 0
    assert proc.stdout


def test_track_empty_input_reports_zero_ticks(tmp_path):
    empty = tmp_path / "empty.ndjson"
    empty.write_text("")
    report_path = tmp_path / "r.json"
    proc = run_cli(["track", "-i", str(empty), "--report", str(report_path)])
    assert proc.returncode == 0
    assert proc.stdout == ""
    assert json.loads(report_path.read_text())["ticks"] == 0


def test_usage_error_exits_1():
    assert main(["no-such-command"]) == 1
    assert main([]) == 1


def test_missing_input_exits_2(tmp_path):
    code = main(["track", "-i", str(tmp_path / "nope.ndjson")])
    assert code == 2


def test_bad_config_exits_1(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text('{"eps0": 0.9, "eps1": 0.5}')
    code = main(["track", "-i", "-", "--config", str(config)])
    assert code == 1


def test_oracle_subcommand(basic_stream, tmp_path):
    report_path = tmp_path / "oracle.json"
    proc = run_cli(
        [
            "oracle",
            "-i",
            str(basic_stream),
            "--window-len",
            "5",
            "--report",
            str(report_path),
        ]
    )
    assert proc.returncode == 0
    ops = [json.loads(line) for line in proc.stdout.splitlines()]
    assert {op["kind"] for op in ops} <= {"birth", "death", "grow", "shrink"}
    report = json.loads(report_path.read_text())
    assert report["ticks"] == 12
    assert all("wall_ms" in row for row in report["rows"])


def test_snapshot_workflow(basic_stream, tmp_path):
    snap = tmp_path / "run.snap"
    proc = run_cli(
        [
            "track",
            "-i",
            str(basic_stream),
            "--window-len",
            "5",
            "--snapshot",
            str(snap),
        ]
    )
    assert proc.returncode == 0
    info = run_cli(["snapshot", "info", str(snap)])
    assert info.returncode == 0
    header = json.loads(info.stdout)
    assert header["config"]["window_len"] == 5

    dump = run_cli(["annotate-dump", "--snapshot", str(snap), "--top-k", "3"])
    assert dump.returncode == 0
    for line in dump.stdout.splitlines():
        entry = json.loads(line)
        assert len(entry["annotation"]) <= 3


def test_snapshot_info_on_garbage_exits_2(tmp_path):
    bad = tmp_path / "bad.snap"
    bad.write_text("garbage")
    assert main(["snapshot", "info", str(bad)]) == 2


def test_resume_matches_uninterrupted(basic_stream, tmp_path):
    lines = Path(basic_stream).read_text().strip().splitlines()
    by_moment = {}
    for line in lines:
        by_moment.setdefault(json.loads(line)["timestamp"], []).append(line)
    moments = sorted(by_moment)
    cut = moments[len(moments) // 2]
    head = "\n".join(l for m in moments if m <= cut for l in by_moment[m])
    tail = "\n".join(l for m in moments if m > cut for l in by_moment[m])

    full = run_cli(["track", "-i", "-", "--window-len", "5"], stdin_text="\n".join(lines))
    snap = tmp_path / "mid.snap"
    first = run_cli(
        ["track", "-i", "-", "--window-len", "5", "--snapshot", str(snap)],
        stdin_text=head,
    )
    second = run_cli(
        ["track", "-i", "-", "--resume", str(snap)],
        stdin_text=tail,
    )
    assert full.returncode == first.returncode == second.returncode == 0
    assert first.stdout + second.stdout == full.stdout


def test_synth_truth_output(tmp_path):
    out = tmp_path / "s.ndjson"
    truth = tmp_path / "t.ndjson"
    proc = run_cli(
        [
            "synth",
            "--preset",
            "merge-split",
            "--seed",
            "2",
            "--out",
            str(out),
            "--truth",
            str(truth),
        ]
    )
    assert proc.returncode == 0
    kinds = {
        (json.loads(line)["t"], json.loads(line)["kind"])
        for line in truth.read_text().splitlines()
    }
    assert (6, "merge") in kinds
    assert (14, "split") in kinds


def test_bench_ordering_smoke():
    proc = run_cli(["bench", "--ordering", "--ticks", "6", "--seed", "1"])
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["study"] == "deletion_order"
    assert payload["ticks"] == 6
