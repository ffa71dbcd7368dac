"""Neural surrogate of the parameter -> outcome map.

A small fully connected network (tanh hidden layers, linear output) is
trained per network size on aggregated sweep results: inputs are the natural
logs of (c, h, a, theta_h, theta_a), targets are the five outcome means.
Both sides are standardized with statistics taken over the whole training
table; constant columns standardize with a divisor of 1 so they pass through
unchanged.

The network, its optimizer, and the training loop are written directly on
numpy arrays.  That keeps the gradient computation fully inspectable --
:func:`loss_and_grads` is part of the public surface precisely so tests can
check it against finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import MEASURES

# Bounds of the swept parameter range; surrogate grids cover this square.
PARAM_MIN = 0.003
PARAM_MAX = 1.0

_INPUT_KEYS = ("c", "h", "a", "theta_h", "theta_a")
_FORMAT_NAME = "coevonet-surrogate"


@dataclass(frozen=True)
class Dataset:
    """Standardization-ready training table for one network size."""

    inputs: np.ndarray       # (N, 5) ln-parameters
    targets: np.ndarray      # (N, 5) outcome means, MEASURES order
    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    network_size: int

    def __len__(self):
        return self.inputs.shape[0]

    def standardized(self):
        x = (self.inputs - self.input_mean) / self.input_std
        y = (self.targets - self.target_mean) / self.target_std
        return x, y


def _safe_std(values: np.ndarray) -> np.ndarray:
    std = values.std(axis=0)
    return np.where(std == 0.0, 1.0, std)


def build_dataset(rows, network_size: int) -> Dataset:
    """Assemble the (ln params -> outcome means) table for one network size.

    ``rows`` are aggregate rows; anything with a different ``n`` is ignored.
    """
    picked = [row for row in rows if row.n == network_size]
    if not picked:
        raise ValueError(f"no aggregate rows with n={network_size}")
    inputs = np.empty((len(picked), len(_INPUT_KEYS)))
    targets = np.empty((len(picked), len(MEASURES)))
    for r, row in enumerate(picked):
        for k, key in enumerate(_INPUT_KEYS):
            value = getattr(row, key)
            if value <= 0.0:
                raise ValueError(
                    f"parameter {key}={value} is not positive; the surrogate "
                    "works on log-scaled inputs"
                )
            inputs[r, k] = math.log(value)
        targets[r] = [row.means[m] for m in MEASURES]
    return Dataset(
        inputs=inputs,
        targets=targets,
        input_mean=inputs.mean(axis=0),
        input_std=_safe_std(inputs),
        target_mean=targets.mean(axis=0),
        target_std=_safe_std(targets),
        network_size=network_size,
    )


@dataclass
class TrainingConfig:
    hidden: tuple = (64, 64)
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    val_fraction: float = 0.1

    def to_dict(self) -> dict:
        return {
            "hidden": list(self.hidden),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "val_fraction": self.val_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass
class SurrogateModel:
    """Trained network plus the statistics needed to use it on raw values."""

    weights: list            # W[l] with shape (fan_in, fan_out)
    biases: list             # b[l] with shape (fan_out,)
    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    network_size: int
    history: dict = field(default_factory=dict)

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x_std: np.ndarray) -> np.ndarray:
        """Standardized inputs -> standardized outputs."""
        act = x_std
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            act = np.tanh(act @ w + b)
        return act @ self.weights[-1] + self.biases[-1]

    def save(self, path) -> None:
        payload = {
            "format": _FORMAT_NAME,
            "network_size": self.network_size,
            "layer_sizes": self.layer_sizes,
            "measures": list(MEASURES),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
            "history": self.history,
        }
        Path(path).write_text(json.dumps(payload) + "\n")

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != _FORMAT_NAME:
            raise ValueError(f"{path} is not a surrogate model file")
        return cls(
            weights=[np.array(w) for w in payload["weights"]],
            biases=[np.array(b) for b in payload["biases"]],
            input_mean=np.array(payload["input_mean"]),
            input_std=np.array(payload["input_std"]),
            target_mean=np.array(payload["target_mean"]),
            target_std=np.array(payload["target_std"]),
            network_size=int(payload["network_size"]),
            history=payload.get("history", {}),
        )


def _init_layers(sizes, rng):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def loss_and_grads(weights, biases, x_std, y_std):
    """Mean-squared error and its gradients for one batch.

    Returns (loss, weight_grads, bias_grads); the loss averages over both
    the batch and the five output components.
    """
    acts = [x_std]
    for w, b in zip(weights[:-1], biases[:-1]):
        acts.append(np.tanh(acts[-1] @ w + b))
    pred = acts[-1] @ weights[-1] + biases[-1]
    err = pred - y_std
    loss = float(np.mean(err**2))

    delta = 2.0 * err / err.size
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - acts[layer] ** 2)
    return loss, grad_w, grad_b


def _full_loss(weights, biases, x_std, y_std):
    loss, _, _ = loss_and_grads(weights, biases, x_std, y_std)
    return loss


def train(dataset: Dataset, config: TrainingConfig | None = None,
          seed: int = 0) -> SurrogateModel:
    """Fit the surrogate with Adam and keep the weights that validate best.

    A seeded 90/10 split (by ``val_fraction``) scores each epoch; with too
    few rows for a validation slice, the training loss picks the snapshot
    instead.  Training is deterministic given (dataset, config, seed).
    """
    config = config or TrainingConfig()
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = [dataset.inputs.shape[1], *config.hidden, dataset.targets.shape[1]]
    weights, biases = _init_layers(sizes, rng)

    x_all, y_all = dataset.standardized()
    perm = rng.permutation(len(dataset))
    n_val = int(round(config.val_fraction * len(dataset)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if len(train_idx) == 0:
        raise ValueError("dataset too small to train on after the validation split")
    x_train, y_train = x_all[train_idx], y_all[train_idx]
    x_val, y_val = x_all[val_idx], y_all[val_idx]

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0

    history = {"train_loss": [], "val_loss": [], "best_epoch": -1}
    best_score = math.inf
    best_weights = [w.copy() for w in weights]
    best_biases = [b.copy() for b in biases]

    for epoch in range(config.epochs):
        order = rng.permutation(len(train_idx))
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            # overflow here surfaces as the non-finite loss below, not as
            # a stream of numpy warnings
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad_w, grad_b = loss_and_grads(
                    weights, biases, x_train[batch], y_train[batch]
                )
            if not math.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch} "
                    f"(learning_rate={config.learning_rate}, "
                    f"batch_size={config.batch_size})"
                )
            step += 1
            correction = math.sqrt(1.0 - config.beta2**step) / (1.0 - config.beta1**step)
            scale = config.learning_rate * correction
            for l in range(len(weights)):
                m_w[l] = config.beta1 * m_w[l] + (1 - config.beta1) * grad_w[l]
                v_w[l] = config.beta2 * v_w[l] + (1 - config.beta2) * grad_w[l] ** 2
                weights[l] = weights[l] - scale * m_w[l] / (np.sqrt(v_w[l]) + config.eps)
                m_b[l] = config.beta1 * m_b[l] + (1 - config.beta1) * grad_b[l]
                v_b[l] = config.beta2 * v_b[l] + (1 - config.beta2) * grad_b[l] ** 2
                biases[l] = biases[l] - scale * m_b[l] / (np.sqrt(v_b[l]) + config.eps)

        train_loss = _full_loss(weights, biases, x_train, y_train)
        history["train_loss"].append(train_loss)
        if len(val_idx):
            val_loss = _full_loss(weights, biases, x_val, y_val)
            history["val_loss"].append(val_loss)
            score = val_loss
        else:
            score = train_loss
        if score < best_score:
            best_score = score
            history["best_epoch"] = epoch
            best_weights = [w.copy() for w in weights]
            best_biases = [b.copy() for b in biases]

    return SurrogateModel(
        weights=best_weights,
        biases=best_biases,
        input_mean=dataset.input_mean.copy(),
        input_std=dataset.input_std.copy(),
        target_mean=dataset.target_mean.copy(),
        target_std=dataset.target_std.copy(),
        network_size=dataset.network_size,
        history=history,
    )


def _predict_ln(model: SurrogateModel, ln_inputs: np.ndarray) -> np.ndarray:
    x_std = (ln_inputs - model.input_mean) / model.input_std
    return model.forward(x_std) * model.target_std + model.target_mean


def predict(model: SurrogateModel, params, clamp: bool = False) -> np.ndarray:
    """Predict the five outcome means for raw parameter vectors.

    ``params`` is (c, h, a, theta_h, theta_a) -- one vector or a batch of
    them; all entries must be positive.  Predictions are raw regression
    output by default; ``clamp`` snaps the community count to >= 1 and
    modularity into [-0.5, 1] for presentation.
    """
    arr = np.asarray(params, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != len(_INPUT_KEYS):
        raise ValueError(f"expected {len(_INPUT_KEYS)} parameters, got {arr.shape[1]}")
    if np.any(arr <= 0.0):
        raise ValueError("all parameters must be positive")
    out = _predict_ln(model, np.log(arr))
    if clamp:
        out = out.copy()
        out[:, MEASURES.index("num_communities")] = np.maximum(
            out[:, MEASURES.index("num_communities")], 1.0
        )
        out[:, MEASURES.index("modularity")] = np.clip(
            out[:, MEASURES.index("modularity")], -0.5, 1.0
        )
    return out[0] if single else out


@dataclass(frozen=True)
class HeatmapGrid:
    """Surrogate predictions over an (h, a) lattice at fixed c and thetas.

    ``fields[measure][i, j]`` is the prediction at ``a_values[i]``,
    ``h_values[j]``; both axes are log-spaced over the swept range.
    """

    h_values: np.ndarray
    a_values: np.ndarray
    fields: dict
    c: float
    theta_h: float
    theta_a: float
    network_size: int

    @property
    def resolution(self) -> int:
        return len(self.h_values)


def evaluate_grid(model: SurrogateModel, c: float, theta_h: float,
                  theta_a: float, resolution: int = 60) -> HeatmapGrid:
    """Evaluate the surrogate over a log-uniform (h, a) lattice.

    The lattice spans the full swept range [0.003, 1.0] inclusive on both
    axes at the given resolution, with c and the two thresholds held fixed.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    for name, value in (("c", c), ("theta_h", theta_h), ("theta_a", theta_a)):
        if value <= 0.0:
            raise ValueError(f"{name} must be positive, got {value}")
    ln_axis = np.linspace(math.log(PARAM_MIN), math.log(PARAM_MAX), resolution)
    ln_a, ln_h = np.meshgrid(ln_axis, ln_axis, indexing="ij")
    flat = np.column_stack(
        [
            np.full(ln_h.size, math.log(c)),
            ln_h.ravel(),
            ln_a.ravel(),
            np.full(ln_h.size, math.log(theta_h)),
            np.full(ln_h.size, math.log(theta_a)),
        ]
    )
    pred = _predict_ln(model, flat)
    fields = {
        m: pred[:, k].reshape(resolution, resolution)
        for k, m in enumerate(MEASURES)
    }
    return HeatmapGrid(
        h_values=np.exp(ln_axis),
        a_values=np.exp(ln_axis),
        fields=fields,
        c=float(c),
        theta_h=float(theta_h),
        theta_a=float(theta_a),
        network_size=model.network_size,
    )
