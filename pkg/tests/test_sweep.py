"""Tests for sweep execution, record files, resume, and aggregation."""

import json

import numpy as np
import pytest

from coevonet import (
    MEASURES,
    OutcomeVector,
    RecordSink,
    RunRecord,
    SweepSpec,
    aggregate,
    build_grid,
    derive_seed,
    execute_sweep,
    load_aggregate_csv,
    run_one,
    write_aggregate_csv,
)

SIX = [0.003, 0.01, 0.03, 0.1, 0.3, 1.0]


def tiny_spec(**overrides):
    base = dict(
        n=[3, 4], c=[0.1], h=[0.0, 0.5], a=[0.2], theta_h=[0.1], theta_a=[0.1],
        replicates=2, base_seed=7, t_end=0.5,
    )
    base.update(overrides)
    return SweepSpec(**base)


def fake_runner(params, seed):
    # cheap deterministic stand-in for run_one
    return OutcomeVector(
        avg_edge_weight=float(seed % 97) / 97.0,
        num_communities=1 + seed % 3,
        modularity=0.25,
        range_community_states=float(params.n),
        std_community_states=0.5,
    )


# ----------------------------------------------------------- spec and grid


def test_grid_order_and_count():
    spec = SweepSpec(
        n=[3], c=[0.1, 0.2], h=[0.0, 1.0], a=[0.5],
        theta_h=[0.1], theta_a=[0.1, 0.9], replicates=1,
    )
    grid = build_grid(spec)
    assert len(grid) == spec.combo_count == 8
    # theta_a varies fastest, then h, then c
    assert [(p.c, p.h, p.theta_a) for p in grid] == [
        (0.1, 0.0, 0.1), (0.1, 0.0, 0.9), (0.1, 1.0, 0.1), (0.1, 1.0, 0.9),
        (0.2, 0.0, 0.1), (0.2, 0.0, 0.9), (0.2, 1.0, 0.1), (0.2, 1.0, 0.9),
    ]


def test_grid_at_full_scale():
    spec = SweepSpec(
        n=[30, 100, 300], c=SIX, h=SIX, a=SIX, theta_h=SIX, theta_a=SIX,
        replicates=5,
    )
    assert spec.combo_count == 3 * 6**5 == 23328
    assert spec.total_runs == 116640


def test_spec_scalar_coercion_and_round_trip(tmp_path):
    spec = SweepSpec(n=5, c=0.1, h=0.2, a=0.3, theta_h=0.4, theta_a=0.5)
    assert spec.n == (5,) and spec.c == (0.1,)
    path = tmp_path / "spec.json"
    spec.save(path)
    assert SweepSpec.load(path) == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        tiny_spec(replicates=0)
    with pytest.raises(ValueError):
        tiny_spec(c=[])
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"n": [3], "c": [0.1], "h": [0.1], "a": [0.1]})
    with pytest.raises(ValueError):
        SweepSpec.from_dict(dict(tiny_spec().to_dict(), bogus=1))


# ----------------------------------------------------------------- seeding


def test_derive_seed_is_deterministic_and_spread():
    assert derive_seed(7, 3, 1) == derive_seed(7, 3, 1)
    assert derive_seed(7, 3, 1) != derive_seed(7, 3, 2)
    assert derive_seed(7, 3, 1) != derive_seed(8, 3, 1)
    assert derive_seed(7, 3, 1) < 2**63


def test_derived_seeds_unique_at_full_scale():
    seeds = set()
    for combo in range(23328):
        for rep in range(5):
            seeds.add(derive_seed(0, combo, rep))
    assert len(seeds) == 116640


# ------------------------------------------------------------ record lines


def test_record_line_round_trip_and_canonical_form():
    spec = tiny_spec()
    params = build_grid(spec)[1]
    ov = fake_runner(params, 12345)
    rec = RunRecord(combo_index=1, replicate=0, seed=12345, params=params,
                    outcome=ov, wall_time=0.5)
    line = rec.to_json_line()
    assert "\n" not in line and '"wall_time"' not in line
    back = RunRecord.from_json_line(line)
    assert back == rec  # wall_time excluded from comparison
    assert back.wall_time is None
    # canonical: key order is sorted, no whitespace
    assert line == json.dumps(json.loads(line), sort_keys=True,
                              separators=(",", ":"))


def test_error_record_round_trip():
    params = build_grid(tiny_spec())[0]
    rec = RunRecord(combo_index=0, replicate=1, seed=1, params=params,
                    error="RuntimeError: boom")
    back = RunRecord.from_json_line(rec.to_json_line())
    assert back.error == "RuntimeError: boom"
    assert back.outcome is None


def test_scan_reports_corrupt_line_numbers(tmp_path):
    spec = tiny_spec()
    params = build_grid(spec)[0]
    good = RunRecord(combo_index=0, replicate=0, seed=1, params=params,
                     outcome=fake_runner(params, 1)).to_json_line()
    path = tmp_path / "records.jsonl"
    path.write_text(good + "\n" + "not json at all\n" + good[: len(good) // 2]
                    + "\n" + good + "\n")
    scanned = RecordSink(path).scan()
    assert scanned.corrupt == [2, 3]
    assert scanned.duplicates == 1  # line 4 repeats line 1's cell
    assert len(scanned.records) == 1
    assert scanned.needs_compaction


# --------------------------------------------------------------- execution


def test_execute_sweep_writes_every_cell(tmp_path):
    spec = tiny_spec()
    out = tmp_path / "records.jsonl"
    summary = execute_sweep(spec, out, quiet=True, runner=fake_runner)
    assert summary.total == summary.completed == 8
    assert summary.failed == 0 and summary.skipped == 0

    scanned = RecordSink(out).scan()
    assert len(scanned.records) == 8
    assert [rec.key for rec in scanned.records] == [
        (ci, rep) for ci in range(4) for rep in range(2)
    ]
    for rec in scanned.records:
        assert rec.seed == derive_seed(spec.base_seed, *rec.key)
        assert rec.params == build_grid(spec)[rec.combo_index]


def test_real_runner_end_to_end(tmp_path):
    spec = tiny_spec(n=[4], h=[0.5], replicates=2, t_end=0.5)
    out = tmp_path / "records.jsonl"
    summary = execute_sweep(spec, out, quiet=True)
    assert summary.completed == 2
    rec = RecordSink(out).scan().records[0]
    assert rec.outcome == run_one(rec.params, rec.seed)


def test_resume_completes_partial_sink_and_matches_uninterrupted(tmp_path):
    spec = tiny_spec()
    full = tmp_path / "full.jsonl"
    execute_sweep(spec, full, quiet=True, runner=fake_runner)

    # simulate a kill: keep only the first 3 lines, cut the 4th mid-record
    lines = full.read_text().splitlines(keepends=True)
    partial = tmp_path / "partial.jsonl"
    partial.write_text("".join(lines[:3]) + lines[3][: len(lines[3]) // 2])

    summary = execute_sweep(spec, partial, quiet=True, runner=fake_runner)
    assert summary.skipped == 3
    assert summary.completed == 5
    assert partial.read_bytes() == full.read_bytes()


def test_resume_is_noop_when_complete(tmp_path):
    spec = tiny_spec()
    out = tmp_path / "records.jsonl"
    execute_sweep(spec, out, quiet=True, runner=fake_runner)
    before = out.read_bytes()
    summary = execute_sweep(spec, out, quiet=True, runner=fake_runner)
    assert summary.skipped == 8 and summary.completed == 0
    assert out.read_bytes() == before


def test_resume_refuses_foreign_sink(tmp_path):
    spec = tiny_spec()
    out = tmp_path / "records.jsonl"
    execute_sweep(spec, out, quiet=True, runner=fake_runner)
    with pytest.raises(ValueError):
        execute_sweep(tiny_spec(base_seed=8), out, quiet=True, runner=fake_runner)
    with pytest.raises(ValueError):
        execute_sweep(tiny_spec(c=[0.9]), out, quiet=True, runner=fake_runner)


def test_no_resume_discards_existing_records(tmp_path):
    out = tmp_path / "records.jsonl"
    out.write_text("garbage\n")
    summary = execute_sweep(tiny_spec(), out, quiet=True, resume=False,
                            runner=fake_runner)
    assert summary.completed == 8
    assert "garbage" not in out.read_text()


def test_parallel_matches_serial(tmp_path):
    spec = tiny_spec(n=[3], t_end=0.3, replicates=3)
    serial = tmp_path / "serial.jsonl"
    parallel = tmp_path / "parallel.jsonl"
    execute_sweep(spec, serial, workers=1, quiet=True)
    execute_sweep(spec, parallel, workers=2, quiet=True)
    assert serial.read_bytes() == parallel.read_bytes()


def failing_runner(params, seed):
    if seed % 2 == 0:
        raise RuntimeError("unlucky seed")
    return fake_runner(params, seed)


def test_failures_are_recorded_and_retried(tmp_path):
    spec = tiny_spec()
    out = tmp_path / "records.jsonl"
    summary = execute_sweep(spec, out, quiet=True, runner=failing_runner)
    assert summary.failed > 0
    scanned = RecordSink(out).scan()
    assert len(scanned.errors) == summary.failed
    assert all("unlucky seed" in rec.error for rec in scanned.errors)

    # a healthier runner on resume retries exactly the failed cells
    summary2 = execute_sweep(spec, out, quiet=True, runner=fake_runner)
    assert summary2.skipped == summary.completed
    assert summary2.completed == summary.failed
    final = RecordSink(out).scan()
    assert len(final.records) == 8 and not final.errors


def test_progress_goes_to_stderr(tmp_path, capsys):
    execute_sweep(tiny_spec(), tmp_path / "r.jsonl", runner=fake_runner)
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "[8/8]" in captured.err


# -------------------------------------------------------------- aggregation


def records_for(spec, runner=fake_runner):
    grid = build_grid(spec)
    recs = []
    for ci, params in enumerate(grid):
        for rep in range(spec.replicates):
            seed = derive_seed(spec.base_seed, ci, rep)
            recs.append(RunRecord(combo_index=ci, replicate=rep, seed=seed,
                                  params=params, outcome=runner(params, seed)))
    return recs


def test_aggregate_means_and_population_std():
    spec = tiny_spec(replicates=3)
    recs = records_for(spec)
    rows = aggregate(recs)
    assert len(rows) == spec.combo_count
    grid = build_grid(spec)
    for row, params in zip(rows, grid):
        assert (row.n, row.c, row.h) == (params.n, params.c, params.h)
        assert row.replicates == 3
    # check one cell against numpy directly
    cell = [rec.outcome.avg_edge_weight for rec in recs if rec.combo_index == 2]
    assert rows[2].means["avg_edge_weight"] == pytest.approx(np.mean(cell))
    assert rows[2].stds["avg_edge_weight"] == pytest.approx(np.std(cell))


def test_aggregate_warns_on_unequal_replicates():
    recs = records_for(tiny_spec(replicates=2))
    with pytest.warns(UserWarning, match="unequal replicate"):
        rows = aggregate(recs[:-1])
    assert rows[-1].replicates == 1


def test_aggregate_skips_error_records():
    recs = records_for(tiny_spec())
    broken = RunRecord(combo_index=0, replicate=5, seed=1,
                       params=recs[0].params, error="x")
    rows_with = aggregate(recs + [broken])
    assert rows_with == aggregate(recs)
    with pytest.raises(ValueError):
        aggregate([broken])


def test_aggregate_csv_round_trip(tmp_path):
    rows = aggregate(records_for(tiny_spec()))
    path = tmp_path / "agg.csv"
    write_aggregate_csv(rows, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:6] == ["n", "c", "h", "a", "theta_h", "theta_a"]
    assert header[6:8] == ["avg_edge_weight_mean", "avg_edge_weight_std"]
    assert header[-1] == "replicates"
    assert len(header) == 6 + 2 * len(MEASURES) + 1
    assert load_aggregate_csv(path) == rows


def test_load_aggregate_csv_rejects_other_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        load_aggregate_csv(path)
