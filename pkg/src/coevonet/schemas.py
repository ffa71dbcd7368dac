"""Request/response models for the HTTP service.

These mirror the core dataclasses closely; validation bounds (positive node
counts, nonnegative rates, positive step sizes) live here so bad requests
bounce with a 422 before any simulation code runs.  All file paths in
requests refer to the service host's filesystem.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from .graph import MEASURES


class SimParamsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1, description="number of nodes")
    c: float = Field(ge=0.0, description="conformity rate")
    h: float = Field(ge=0.0, description="homophily rate")
    a: float = Field(ge=0.0, description="novelty-seeking rate")
    theta_h: float = Field(ge=0.0, description="homophily tolerance")
    theta_a: float = Field(ge=0.0, description="novelty threshold")
    noise_sigma: float = Field(default=0.1, ge=0.0)
    dt: float = Field(default=0.1, gt=0.0)
    t_end: float = Field(default=100.0, gt=0.0)


class OutcomeModel(BaseModel):
    avg_edge_weight: float
    num_communities: int
    modularity: float
    range_community_states: float
    std_community_states: float


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    params: SimParamsModel
    seed: int = Field(default=0, ge=0)
    snapshot_interval: int = Field(default=0, ge=0)
    snapshot_path: str | None = None


class RunResponse(BaseModel):
    outcome: OutcomeModel
    seed: int
    elapsed_seconds: float


class SweepSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: list[int] = Field(min_length=1)
    c: list[float] = Field(min_length=1)
    h: list[float] = Field(min_length=1)
    a: list[float] = Field(min_length=1)
    theta_h: list[float] = Field(min_length=1)
    theta_a: list[float] = Field(min_length=1)
    replicates: int = Field(default=1, ge=1)
    base_seed: int = Field(default=0, ge=0)
    noise_sigma: float = Field(default=0.1, ge=0.0)
    dt: float = Field(default=0.1, gt=0.0)
    t_end: float = Field(default=100.0, gt=0.0)


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SweepSpecModel
    out_path: str
    workers: int = Field(default=1, ge=1)
    resume: bool = True
    quiet: bool = Field(default=True, description="suppress progress lines on the service's stderr")


class SweepResponse(BaseModel):
    out_path: str
    total: int
    completed: int
    failed: int
    skipped: int
    elapsed_seconds: float


class AggregateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    records_path: str
    out_path: str


class AggregateResponse(BaseModel):
    out_path: str
    rows: int
    warnings: list[str] = []


class TrainingConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hidden: list[int] = Field(default=[64, 64], min_length=1)
    epochs: int = Field(default=300, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    val_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    table_path: str
    network_size: int = Field(ge=1)
    out_path: str
    seed: int = Field(default=0, ge=0)
    config: TrainingConfigModel = TrainingConfigModel()


class FitResponse(BaseModel):
    out_path: str
    network_size: int
    rows: int
    best_epoch: int
    best_val_loss: float | None
    final_train_loss: float


class HeatmapRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_path: str
    out_dir: str
    c: float = Field(gt=0.0)
    theta_h: float = Field(gt=0.0)
    theta_a: float = Field(gt=0.0)
    resolution: int = Field(default=60, ge=2)
    measures: list[str] = Field(default=list(MEASURES), min_length=1)


class HeatmapResponse(BaseModel):
    files: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
