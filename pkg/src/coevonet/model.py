"""Coupled opinion/weight dynamics on a dense directed network.

State: node opinions x (length n) and nonnegative directed weights w (n x n),
where w[i, j] is the influence of source j on target i and the diagonal is
pinned to zero. One forward-Euler step advances both synchronously from the
pre-step state:

    x_i  <- x_i + dt * c * (<x>_i - x_i) + eta_i,    eta_i ~ N(0, noise_sigma^2)
    w_ij <- max(0, w_ij + dt * (h * (theta_h - |x_i - x_j|)
                              + a * (|<x>_i - x_j| - theta_a)))

with <x>_i the in-weight-weighted mean of the other opinions, falling back to
x_i when node i has zero total in-weight. The noise term is added once per
step, unscaled by dt. Negative weights are clamped to zero immediately after
each step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .seeds import SIM_STREAM, rng_for

__all__ = [
    "SimParams",
    "NetworkState",
    "init_network",
    "local_average",
    "homophily_kernel",
    "novelty_kernel",
    "euler_step",
    "run_simulation",
]

_BEHAVIORAL_FIELDS = ("c", "h", "a", "theta_h", "theta_a")


@dataclass(frozen=True)
class SimParams:
    """All scalar knobs of one simulation run."""

    n: int
    c: float
    h: float
    a: float
    theta_h: float
    theta_a: float
    noise_sigma: float = 0.1
    dt: float = 0.1
    t_end: float = 100.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end <= 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        for name in _BEHAVIORAL_FIELDS + ("noise_sigma",):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def step_count(self) -> int:
        """Number of Euler steps covering [0, t_end] (1000 at the defaults)."""
        return round(self.t_end / self.dt)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "h": self.h,
            "a": self.a,
            "theta_h": self.theta_h,
            "theta_a": self.theta_a,
            "noise_sigma": self.noise_sigma,
            "dt": self.dt,
            "t_end": self.t_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimParams":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Opinion vector plus dense directed weight matrix at one instant.

    Arrays are frozen read-only after construction; every step allocates a
    new state, so states are safe to share across threads.
    """

    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("x must be a 1-d vector")
        n = x.shape[0]
        if w.shape != (n, n):
            raise ValueError(f"w must have shape ({n}, {n}), got {w.shape}")
        x.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def tobytes(self) -> bytes:
        """Canonical byte serialization (x then row-major w)."""
        return self.x.tobytes() + self.w.tobytes()


def init_network(n: int, rng: np.random.Generator) -> NetworkState:
    """Random initial configuration.

    Draw order is fixed for reproducibility: the full n x n weight matrix is
    sampled row-major from the standard uniform distribution and its diagonal
    is then zeroed, followed by n standard-normal opinions.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    w = rng.random((n, n))
    np.fill_diagonal(w, 0.0)
    x = rng.standard_normal(n)
    return NetworkState(x=x, w=w)


def _local_averages(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """In-weight-weighted neighbor opinion means; x_i where in-weight is 0."""
    totals = w.sum(axis=1)
    safe = np.where(totals > 0.0, totals, 1.0)
    return np.where(totals > 0.0, (w @ x) / safe, x)


def local_average(state: NetworkState, i: int) -> float:
    """Perceived social norm of node i."""
    if not 0 <= i < state.n:
        raise IndexError(f"node index {i} out of range for n={state.n}")
    row = state.w[i]
    total = row.sum()
    if total == 0.0:
        return float(state.x[i])
    return float(row @ state.x / total)


def homophily_kernel(x_i: float, x_j: float, theta_h: float) -> float:
    """Edge-weight drive from opinion similarity of target and source."""
    return theta_h - abs(x_i - x_j)


def novelty_kernel(local_avg: float, x_j: float, theta_a: float) -> float:
    """Edge-weight drive from the source deviating from the perceived norm."""
    return abs(local_avg - x_j) - theta_a


def euler_step(state: NetworkState, params: SimParams, rng: np.random.Generator) -> NetworkState:
    """One synchronous forward-Euler step.

    All local averages come from the pre-step state; the weight update also
    uses pre-step opinions. Noise is drawn in ascending node order, one
    normal per node per step.
    """
    x, w = state.x, state.w
    local = _local_averages(x, w)
    noise = params.noise_sigma * rng.standard_normal(x.shape[0])
    new_x = x + params.dt * params.c * (local - x) + noise
    pair_dist = np.abs(x[:, None] - x[None, :])
    drive = params.h * (params.theta_h - pair_dist)
    drive += params.a * (np.abs(local[:, None] - x[None, :]) - params.theta_a)
    new_w = w + params.dt * drive
    np.maximum(new_w, 0.0, out=new_w)
    np.fill_diagonal(new_w, 0.0)
    return NetworkState(x=new_x, w=new_w)


def _snapshot_line(step: int, state: NetworkState) -> str:
    n = state.n
    off_diag = n * (n - 1)
    mean_w = float(np.abs(state.w).sum() / off_diag) if off_diag else 0.0
    record = {
        "step": step,
        "x": state.x.tolist(),
        "mean_abs_weight": mean_w,
        "x_spread": float(state.x.max() - state.x.min()),
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def run_simulation(
    params: SimParams,
    seed: int,
    snapshot_interval: int = 0,
    snapshot_path=None,
) -> NetworkState:
    """Integrate from a seeded random initial condition to t_end.

    Runs exactly round(t_end / dt) Euler steps. With snapshot_interval > 0
    and a snapshot_path, appends one JSON line per interval (step 0 and the
    final step included) carrying the step index, the opinion vector, the
    mean absolute weight, and the opinion spread.
    """
    rng = rng_for(seed, SIM_STREAM)
    state = init_network(params.n, rng)
    steps = params.step_count
    sink = None
    try:
        if snapshot_interval > 0 and snapshot_path is not None:
            sink = open(snapshot_path, "w", encoding="utf-8")
            sink.write(_snapshot_line(0, state) + "\n")
        for step in range(1, steps + 1):
            state = euler_step(state, params, rng)
            if sink is not None and (step % snapshot_interval == 0 or step == steps):
                sink.write(_snapshot_line(step, state) + "\n")
    finally:
        if sink is not None:
            sink.close()
    return state
