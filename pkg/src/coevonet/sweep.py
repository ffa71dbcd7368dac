"""Parameter sweep execution, on-disk run records, and aggregation.

A sweep is the cartesian product of parameter value lists (ordered n, c, h,
a, theta_h, theta_a) crossed with a replicate count.  Every (combo,
replicate) cell gets its own seed derived from the sweep's base seed, so any
cell can be recomputed independently and in any order.

Run records land in a JSONL sink, one canonical line per completed run,
flushed as soon as each run finishes.  Interrupting a sweep therefore loses
at most the in-flight runs; rerunning with the same sink resumes from
whatever is already on disk.  After a sweep finishes, the sink is compacted
into (combo_index, replicate) order, so two sweeps over the same spec end up
with byte-identical files no matter how they were interrupted or
parallelized.  Failed runs are recorded with an ``error`` field instead of
an outcome and are retried on resume.
"""

from __future__ import annotations

import itertools
import json
import os
import sys
import time
import warnings
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import MEASURES, OutcomeVector, outcome_vector
from .model import SimParams, run_simulation
from .seeds import LOUVAIN_STREAM, derive_seed, rng_for

_GRID_KEYS = ("n", "c", "h", "a", "theta_h", "theta_a")


def _value_list(raw, key):
    if isinstance(raw, (int, float)):
        raw = [raw]
    values = [int(v) if key == "n" else float(v) for v in raw]
    if not values:
        raise ValueError(f"sweep axis '{key}' has no values")
    return tuple(values)


@dataclass(frozen=True)
class SweepSpec:
    """Value lists for each model parameter plus replication and seeding."""

    n: tuple
    c: tuple
    h: tuple
    a: tuple
    theta_h: tuple = ()
    theta_a: tuple = ()
    replicates: int = 1
    base_seed: int = 0
    noise_sigma: float = 0.1
    dt: float = 0.1
    t_end: float = 100.0

    def __post_init__(self):
        for key in _GRID_KEYS:
            object.__setattr__(self, key, _value_list(getattr(self, key), key))
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.base_seed < 0:
            raise ValueError(f"base_seed must be nonnegative, got {self.base_seed}")

    @property
    def combo_count(self) -> int:
        count = 1
        for key in _GRID_KEYS:
            count *= len(getattr(self, key))
        return count

    @property
    def total_runs(self) -> int:
        return self.combo_count * self.replicates

    def to_dict(self) -> dict:
        d = {key: list(getattr(self, key)) for key in _GRID_KEYS}
        d.update(
            replicates=self.replicates,
            base_seed=self.base_seed,
            noise_sigma=self.noise_sigma,
            dt=self.dt,
            t_end=self.t_end,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep spec keys: {sorted(unknown)}")
        missing = [key for key in _GRID_KEYS if key not in d]
        if missing:
            raise ValueError(f"sweep spec is missing axes: {missing}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_grid(spec: SweepSpec) -> list[SimParams]:
    """All parameter combinations, ordered by position in the value lists.

    The combo index enumerates the cartesian product with n varying slowest
    and theta_a fastest.
    """
    grid = []
    for n, c, h, a, theta_h, theta_a in itertools.product(
        spec.n, spec.c, spec.h, spec.a, spec.theta_h, spec.theta_a
    ):
        grid.append(
            SimParams(
                n=n, c=c, h=h, a=a, theta_h=theta_h, theta_a=theta_a,
                noise_sigma=spec.noise_sigma, dt=spec.dt, t_end=spec.t_end,
            )
        )
    return grid


@dataclass(frozen=True)
class RunRecord:
    """One simulation run: its grid cell, seed, and outcome (or failure).

    ``wall_time`` is measured when the run executes but is deliberately kept
    out of the serialized line so record files are reproducible byte for
    byte.
    """

    combo_index: int
    replicate: int
    seed: int
    params: SimParams
    outcome: OutcomeVector | None = None
    error: str | None = None
    wall_time: float | None = field(default=None, compare=False)

    @property
    def key(self) -> tuple:
        return (self.combo_index, self.replicate)

    def to_json_line(self) -> str:
        payload = {
            "combo_index": self.combo_index,
            "replicate": self.replicate,
            "seed": self.seed,
            "params": self.params.to_dict(),
        }
        if self.error is None:
            payload["outcome"] = self.outcome.to_dict()
        else:
            payload["error"] = self.error
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "RunRecord":
        payload = json.loads(line)
        outcome = payload.get("outcome")
        return cls(
            combo_index=int(payload["combo_index"]),
            replicate=int(payload["replicate"]),
            seed=int(payload["seed"]),
            params=SimParams.from_dict(payload["params"]),
            outcome=None if outcome is None else OutcomeVector.from_dict(outcome),
            error=payload.get("error"),
        )


@dataclass
class ScanResult:
    records: list        # completed runs, one per (combo, replicate)
    errors: list         # runs that ended in a recorded failure
    corrupt: list = field(default_factory=list)  # 1-based numbers of unparseable lines
    duplicates: int = 0  # extra lines for an already-seen cell

    @property
    def needs_compaction(self) -> bool:
        return bool(self.errors) or bool(self.corrupt) or self.duplicates > 0


class RecordSink:
    """Append-only JSONL file of run records with scan/compact maintenance."""

    def __init__(self, path):
        self.path = Path(path)

    def scan(self) -> ScanResult:
        """Read every parseable record, keeping one per cell.

        A successful record wins over a failed one for the same cell;
        otherwise the first occurrence wins.
        """
        result = ScanResult(records=[], errors=[])
        if not self.path.exists():
            return result
        by_key: dict[tuple, RunRecord] = {}
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = RunRecord.from_json_line(line)
                except (ValueError, KeyError, TypeError):
                    result.corrupt.append(lineno)
                    continue
                prev = by_key.get(rec.key)
                if prev is None:
                    by_key[rec.key] = rec
                elif prev.error is not None and rec.error is None:
                    by_key[rec.key] = rec
                    result.duplicates += 1
                else:
                    result.duplicates += 1
        for rec in sorted(by_key.values(), key=lambda r: r.key):
            (result.errors if rec.error is not None else result.records).append(rec)
        return result

    def compact(self, records) -> None:
        """Atomically rewrite the sink as the given records in cell order."""
        tmp = self.path.with_name(self.path.name + ".tmp")
        with open(tmp, "w") as fh:
            for rec in sorted(records, key=lambda r: r.key):
                fh.write(rec.to_json_line() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)

    def appender(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        return open(self.path, "a")


def run_one(params: SimParams, seed: int) -> OutcomeVector:
    """Simulate one cell and summarize its final state.

    Community detection gets its own random stream derived from the same
    seed, so the outcome is a pure function of (params, seed).
    """
    state = run_simulation(params, seed)
    return outcome_vector(state, rng_for(seed, LOUVAIN_STREAM))


def _execute_cell(grid_cell) -> RunRecord:
    combo_index, replicate, seed, params, runner = grid_cell
    start = time.perf_counter()
    try:
        outcome = runner(params, seed)
        return RunRecord(
            combo_index=combo_index, replicate=replicate, seed=seed,
            params=params, outcome=outcome,
            wall_time=time.perf_counter() - start,
        )
    except Exception as exc:  # recorded, not raised: one bad cell can't kill a sweep
        return RunRecord(
            combo_index=combo_index, replicate=replicate, seed=seed,
            params=params, error=f"{type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - start,
        )


@dataclass
class SweepSummary:
    total: int
    completed: int
    failed: int
    skipped: int
    elapsed: float

    @property
    def ok(self) -> bool:
        return self.failed == 0


def execute_sweep(
    spec: SweepSpec,
    out_path,
    workers: int = 1,
    resume: bool = True,
    quiet: bool = False,
    runner=None,
) -> SweepSummary:
    """Run every missing cell of the sweep, streaming records to disk.

    With ``resume`` (the default) existing records in the sink are kept and
    only missing or previously failed cells run; otherwise the sink is
    discarded.  ``workers`` > 1 distributes cells over that many processes.
    ``runner`` replaces the per-cell function (params, seed) -> OutcomeVector
    and exists for testing.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    runner = run_one if runner is None else runner
    grid = build_grid(spec)
    sink = RecordSink(out_path)
    start = time.perf_counter()

    done_keys: set = set()
    if resume:
        scanned = sink.scan()
        for rec in scanned.records:
            if rec.combo_index >= len(grid) or rec.replicate >= spec.replicates:
                raise ValueError(
                    f"{sink.path} holds records outside this sweep's grid; "
                    "refusing to mix sweeps in one sink"
                )
            if rec.params != grid[rec.combo_index]:
                raise ValueError(
                    f"{sink.path} was produced by a different sweep spec "
                    f"(combo {rec.combo_index} mismatch)"
                )
            if rec.seed != derive_seed(spec.base_seed, rec.combo_index, rec.replicate):
                raise ValueError(
                    f"{sink.path} was produced with a different base seed"
                )
        if scanned.needs_compaction:
            sink.compact(scanned.records)
        done_keys = {rec.key for rec in scanned.records}
    elif sink.path.exists():
        sink.path.unlink()

    tasks = [
        (ci, rep, derive_seed(spec.base_seed, ci, rep), grid[ci], runner)
        for ci in range(len(grid))
        for rep in range(spec.replicates)
        if (ci, rep) not in done_keys
    ]
    total = spec.total_runs
    progress_every = max(1, len(tasks) // 20)
    done = 0
    failed = 0

    def note_progress(rec: RunRecord):
        nonlocal done, failed
        done += 1
        if rec.error is not None:
            failed += 1
            if not quiet:
                print(
                    f"run {rec.combo_index}/{rec.replicate} failed: {rec.error}",
                    file=sys.stderr,
                )
        if not quiet and (done % progress_every == 0 or done == len(tasks)):
            print(f"[{len(done_keys) + done}/{total}] runs on disk", file=sys.stderr)

    with sink.appender() as out:
        def emit(rec: RunRecord):
            out.write(rec.to_json_line() + "\n")
            out.flush()
            note_progress(rec)

        if workers == 1:
            for task in tasks:
                emit(_execute_cell(task))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                pending = set()
                queue = iter(tasks)
                for task in itertools.islice(queue, workers * 2):
                    pending.add(pool.submit(_execute_cell, task))
                while pending:
                    finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in finished:
                        emit(fut.result())
                    for task in itertools.islice(queue, len(finished)):
                        pending.add(pool.submit(_execute_cell, task))

    final = sink.scan()
    sink.compact(final.records + final.errors)
    return SweepSummary(
        total=total,
        completed=done - failed,
        failed=failed,
        skipped=len(done_keys),
        elapsed=time.perf_counter() - start,
    )


# ------------------------------------------------------------- aggregation


@dataclass(frozen=True)
class AggregateRow:
    """Per-combo outcome statistics across replicates."""

    n: int
    c: float
    h: float
    a: float
    theta_h: float
    theta_a: float
    replicates: int
    means: dict
    stds: dict


def aggregate(records) -> list[AggregateRow]:
    """Collapse run records into per-combo means and population stds.

    Rows come back in combo-index order.  Unequal replicate counts between
    combos (e.g. a partially completed sweep) trigger a warning but still
    aggregate whatever is present.
    """
    groups: dict[int, list[RunRecord]] = {}
    for rec in records:
        if rec.error is not None:
            continue
        groups.setdefault(rec.combo_index, []).append(rec)
    if not groups:
        raise ValueError("no successful run records to aggregate")
    counts = {len(g) for g in groups.values()}
    if len(counts) > 1:
        warnings.warn(
            f"unequal replicate counts across combos: {sorted(counts)}",
            stacklevel=2,
        )
    rows = []
    for combo_index in sorted(groups):
        group = groups[combo_index]
        p = group[0].params
        values = np.array([rec.outcome.as_array() for rec in group])
        means = values.mean(axis=0)
        stds = values.std(axis=0)
        rows.append(
            AggregateRow(
                n=p.n, c=p.c, h=p.h, a=p.a, theta_h=p.theta_h, theta_a=p.theta_a,
                replicates=len(group),
                means={m: float(v) for m, v in zip(MEASURES, means)},
                stds={m: float(v) for m, v in zip(MEASURES, stds)},
            )
        )
    return rows


AGGREGATE_HEADER = (
    ["n", "c", "h", "a", "theta_h", "theta_a"]
    + [f"{m}_{stat}" for m in MEASURES for stat in ("mean", "std")]
    + ["replicates"]
)


def write_aggregate_csv(rows, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_HEADER)
        for row in rows:
            out = [row.n, row.c, row.h, row.a, row.theta_h, row.theta_a]
            for m in MEASURES:
                out.extend([row.means[m], row.stds[m]])
            out.append(row.replicates)
            writer.writerow(out)


def load_aggregate_csv(path) -> list[AggregateRow]:
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != AGGREGATE_HEADER:
            raise ValueError(f"{path} is not an aggregate table (bad header)")
        rows = []
        for raw in reader:
            if not raw:
                continue
            vals = dict(zip(AGGREGATE_HEADER, raw))
            rows.append(
                AggregateRow(
                    n=int(vals["n"]),
                    c=float(vals["c"]),
                    h=float(vals["h"]),
                    a=float(vals["a"]),
                    theta_h=float(vals["theta_h"]),
                    theta_a=float(vals["theta_a"]),
                    replicates=int(vals["replicates"]),
                    means={m: float(vals[f"{m}_mean"]) for m in MEASURES},
                    stds={m: float(vals[f"{m}_std"]) for m in MEASURES},
                )
            )
    return rows
