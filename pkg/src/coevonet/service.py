"""HTTP facade over the simulator, sweep runner, surrogate, and renderer.

Every operation is exposed as a synchronous POST endpoint taking and
returning JSON; long jobs (sweeps, training) simply hold the request open
until they finish.  File-path fields name files on the machine the service
runs on -- the endpoints read and write them directly, which is the point:
the service owns the data directory, clients just coordinate work.

Client mistakes map onto status codes the usual way: malformed bodies are
422 (pydantic), references to missing files are 404, and anything the core
library rejects with a ValueError comes back as a 400 with the message.
"""

from __future__ import annotations

import time
import warnings
from contextlib import contextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException

from . import __version__
from .graph import outcome_vector
from .model import SimParams, run_simulation
from .schemas import (
    AggregateRequest,
    AggregateResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    HeatmapRequest,
    HeatmapResponse,
    RunRequest,
    RunResponse,
    SweepRequest,
    SweepResponse,
)
from .seeds import LOUVAIN_STREAM, rng_for
from .surrogate import (
    SurrogateModel,
    TrainingConfig,
    build_dataset,
    evaluate_grid,
    train,
)
from .sweep import (
    RecordSink,
    SweepSpec,
    aggregate,
    execute_sweep,
    load_aggregate_csv,
    write_aggregate_csv,
)
from .heatmap import write_heatmap_outputs


@contextmanager
def _client_errors():
    """Translate core-library rejections into HTTP client errors."""
    try:
        yield
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="coevonet", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        with _client_errors():
            params = SimParams(**req.params.model_dump())
            start = time.perf_counter()
            state = run_simulation(
                params,
                req.seed,
                snapshot_interval=req.snapshot_interval,
                snapshot_path=req.snapshot_path,
            )
            outcome = outcome_vector(state, rng_for(req.seed, LOUVAIN_STREAM))
        return RunResponse(
            outcome=outcome.to_dict(),
            seed=req.seed,
            elapsed_seconds=time.perf_counter() - start,
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        with _client_errors():
            spec = SweepSpec.from_dict(req.spec.model_dump())
            summary = execute_sweep(
                spec, req.out_path, workers=req.workers, resume=req.resume,
                quiet=req.quiet,
            )
        return SweepResponse(
            out_path=req.out_path,
            total=summary.total,
            completed=summary.completed,
            failed=summary.failed,
            skipped=summary.skipped,
            elapsed_seconds=summary.elapsed,
        )

    @app.post("/aggregate", response_model=AggregateResponse)
    def aggregate_records(req: AggregateRequest):
        with _client_errors():
            sink = RecordSink(req.records_path)
            if not sink.path.exists():
                raise FileNotFoundError(f"no record file at {req.records_path}")
            scanned = sink.scan()
            if scanned.corrupt:
                shown = ", ".join(str(i) for i in scanned.corrupt[:10])
                if len(scanned.corrupt) > 10:
                    shown += ", ..."
                raise ValueError(
                    f"{req.records_path}: unparseable record line(s) {shown}; "
                    "aborting aggregation"
                )
            notes = []
            if scanned.errors:
                notes.append(f"{len(scanned.errors)} failed runs were excluded")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rows = aggregate(scanned.records)
            notes.extend(str(w.message) for w in caught)
            write_aggregate_csv(rows, req.out_path)
        return AggregateResponse(out_path=req.out_path, rows=len(rows),
                                 warnings=notes)

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest):
        with _client_errors():
            rows = load_aggregate_csv(req.table_path)
            dataset = build_dataset(rows, req.network_size)
            config = TrainingConfig.from_dict(req.config.model_dump())
            try:
                model = train(dataset, config, seed=req.seed)
            except RuntimeError as exc:  # divergence is a config problem
                raise HTTPException(status_code=400, detail=str(exc))
            model.save(req.out_path)
        hist = model.history
        return FitResponse(
            out_path=req.out_path,
            network_size=model.network_size,
            rows=len(dataset),
            best_epoch=hist["best_epoch"],
            best_val_loss=min(hist["val_loss"]) if hist["val_loss"] else None,
            final_train_loss=hist["train_loss"][-1],
        )

    @app.post("/heatmap", response_model=HeatmapResponse)
    def heatmap(req: HeatmapRequest):
        with _client_errors():
            model = SurrogateModel.load(req.model_path)
            grid = evaluate_grid(
                model, c=req.c, theta_h=req.theta_h, theta_a=req.theta_a,
                resolution=req.resolution,
            )
            files = []
            for measure in req.measures:
                ppm_path, csv_path = write_heatmap_outputs(grid, measure, req.out_dir)
                files.extend([str(ppm_path), str(csv_path)])
        return HeatmapResponse(files=files)

    return app


app = create_app()
