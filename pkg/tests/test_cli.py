"""Tests for the command-line client."""

import json
import socket
import subprocess
import sys
import threading
import time

import pytest

from coevonet import MEASURES, SimParams, run_one
from coevonet.cli import main


def run_args(tmp=None, **overrides):
    base = dict(n="5", c="0.1", h="0.2", a="0.1", theta_h="0.1",
                theta_a="0.1", t_end="1.0", seed="3")
    base.update(overrides)
    args = ["run"]
    for key, val in base.items():
        args.extend([f"--{key.replace('_', '-')}", val])
    return args


def write_spec(path, **overrides):
    spec = dict(n=[4], c=[0.1], h=[0.1, 0.3], a=[0.1], theta_h=[0.1],
                theta_a=[0.1], replicates=2, base_seed=5, t_end=0.5)
    spec.update(overrides)
    path.write_text(json.dumps(spec))
    return path


def test_run_prints_outcome_json(capsys):
    assert main(run_args()) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    outcome = json.loads(out[0])
    assert set(outcome) == set(MEASURES)
    params = SimParams(n=5, c=0.1, h=0.2, a=0.1, theta_h=0.1, theta_a=0.1,
                       t_end=1.0)
    assert outcome == run_one(params, 3).to_dict()


def test_run_rejects_bad_node_count(capsys):
    assert main(run_args(n="0")) == 1
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "error" in captured.err


def test_missing_required_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--n", "5"])
    assert exc.value.code == 2


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_run_snapshot_flags(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    code = main(run_args(**{"snapshot-every": "4", "snapshot-out": str(trace)}))
    assert code == 0
    steps = [json.loads(line)["step"] for line in trace.read_text().splitlines()]
    assert steps == [0, 4, 8, 10]


def test_sweep_aggregate_fit_heatmap_pipeline(tmp_path, capsys):
    spec = write_spec(tmp_path / "spec.json")
    records = tmp_path / "records.jsonl"
    assert main(["sweep", "--spec", str(spec), "--out", str(records),
                 "--quiet"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["completed"] == 4 and summary["failed"] == 0

    table = tmp_path / "table.csv"
    assert main(["aggregate", "--records", str(records), "--out", str(table),
                 "--quiet"]) == 0
    assert json.loads(capsys.readouterr().out)["rows"] == 2

    model = tmp_path / "model.json"
    assert main(["fit", "--table", str(table), "--n", "4", "--out", str(model),
                 "--epochs", "5", "--quiet"]) == 0
    assert json.loads(capsys.readouterr().out)["network_size"] == 4

    maps = tmp_path / "maps"
    assert main(["heatmap", "--model", str(model), "--out-dir", str(maps),
                 "--c", "0.1", "--theta-h", "0.1", "--theta-a", "0.1",
                 "--resolution", "6", "--measure", "modularity",
                 "--quiet"]) == 0
    files = json.loads(capsys.readouterr().out)["files"]
    assert len(files) == 2
    assert (maps / "modularity__n4__c0.1__thh0.1__tha0.1.ppm").exists()


def test_sweep_rerun_is_idempotent(tmp_path, capsys):
    spec = write_spec(tmp_path / "spec.json")
    records = tmp_path / "records.jsonl"
    main(["sweep", "--spec", str(spec), "--out", str(records), "--quiet"])
    first = records.read_bytes()
    assert main(["sweep", "--spec", str(spec), "--out", str(records),
                 "--quiet"]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["skipped"] == 4
    assert records.read_bytes() == first


def test_sweep_missing_spec_file_exits_1(tmp_path, capsys):
    code = main(["sweep", "--spec", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "r.jsonl")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_heatmap_rejects_unknown_measure(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["heatmap", "--model", "m.json", "--out-dir", str(tmp_path),
              "--c", "0.1", "--theta-h", "0.1", "--theta-a", "0.1",
              "--measure", "banana"])
    assert exc.value.code == 2


def test_quiet_silences_stderr_chatter(tmp_path, capsys):
    spec = write_spec(tmp_path / "spec.json")
    main(["sweep", "--spec", str(spec), "--out", str(tmp_path / "r.jsonl"),
          "--quiet"])
    assert capsys.readouterr().err == ""


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "coevonet", "run", "--n", "4", "--c", "0.1",
         "--h", "0.1", "--a", "0.1", "--theta-h", "0.1", "--theta-a", "0.1",
         "--t-end", "0.5", "--quiet"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert set(json.loads(proc.stdout)) == set(MEASURES)


def test_remote_server_mode(tmp_path, capsys):
    uvicorn = pytest.importorskip("uvicorn")
    from coevonet.service import app

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.time() + 30
        while not server.started:
            if time.time() > deadline:
                pytest.fail("uvicorn did not start in time")
            time.sleep(0.05)
        port = server.servers[0].sockets[0].getsockname()[1]
        url = f"http://127.0.0.1:{port}"

        assert main(["--server", url] + run_args()) == 0
        outcome = json.loads(capsys.readouterr().out)
        params = SimParams(n=5, c=0.1, h=0.2, a=0.1, theta_h=0.1,
                           theta_a=0.1, t_end=1.0)
        assert outcome == run_one(params, 3).to_dict()

        # paths in remote mode are interpreted by the server; same machine
        # here, so the file shows up where we asked
        spec = write_spec(tmp_path / "spec.json")
        records = tmp_path / "records.jsonl"
        assert main(["--server", url, "sweep", "--spec", str(spec),
                     "--out", str(records), "--quiet"]) == 0
        assert records.exists()
    finally:
        server.should_exit = True
        thread.join(timeout=10)


def test_remote_connection_refused_exits_1(capsys):
    # grab a port that nothing is listening on
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    code = main(["--server", f"http://127.0.0.1:{port}"] + run_args())
    assert code == 1
    assert "error" in capsys.readouterr().err
