"""Fully-connected embedding network, written from scratch on numpy.

The embedder regresses flattened sensor windows onto target-space vectors
with plain minibatch SGD and MSE loss; the same architecture with a
1-dimensional logistic head is the feedforward classification baseline.
The training loop is a hot kernel (see `backend`); the public forward and
gradient functions below are plain numpy and serve as the reference the
kernels are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import get_kernels
from .errors import ConfigError, DimensionError, NumericError, TrainingDivergedError
from .util import derive_seed

ACTIVATION = "relu"


@dataclass
class MLPModel:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = ACTIVATION
    init_seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2:
            raise ConfigError("need at least input and output layers")
        if any(d < 1 for d in dims):
            raise ConfigError(f"layer dims must be positive, got {dims}")
        if self.activation != ACTIVATION:
            raise ConfigError(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "layer_dims", dims)
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l], dims[l + 1]) or b.shape != (dims[l + 1],):
                raise DimensionError(f"layer {l} parameter shapes inconsistent with {dims}")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings. Paper-protocol grids draw width from
    {128, 512, 1024, 2048, 4096, 8192}, learning rate from
    {1e-7 .. 1e-5}, epochs from {1000, 2000, 4000} and batch size from
    {4, 8, 16, 32}; desk-scale runs may use values outside those lists.
    """

    width: int = 128
    learning_rate: float = 1e-5
    epochs: int = 1000
    batch_size: int = 16
    n_hidden_layers: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("width and batch_size must be positive, epochs non-negative")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.n_hidden_layers < 0:
            raise ConfigError("n_hidden_layers must be >= 0")

    def layer_dims(self, input_dim: int, output_dim: int) -> tuple[int, ...]:
        return (input_dim, *([self.width] * self.n_hidden_layers), output_dim)


@dataclass
class TrainHistory:
    epoch_losses: np.ndarray = field(default_factory=lambda: np.empty(0))
    final_val_loss: float | None = None


def init_mlp(layer_dims, seed: int) -> MLPModel:
    """He initialization: weights ~ N(0, 2/fan_in), biases zero."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ConfigError("need at least input and output layers")
    if any(d < 1 for d in dims):
        raise ConfigError(f"layer dims must be positive, got {dims}")
    rng = np.random.default_rng(int(seed))
    weights, biases = [], []
    for l in range(len(dims) - 1):
        scale = np.sqrt(2.0 / dims[l])
        weights.append(rng.standard_normal((dims[l], dims[l + 1])) * scale)
        biases.append(np.zeros(dims[l + 1]))
    return MLPModel(dims, weights, biases, ACTIVATION, int(seed))


def _forward_stack(model: MLPModel, X: np.ndarray):
    """All layer inputs plus the final affine output."""
    ins = [X]
    cur = X
    for l in range(len(model.weights) - 1):
        cur = np.maximum(cur @ model.weights[l] + model.biases[l], 0.0)
        ins.append(cur)
    out = cur @ model.weights[-1] + model.biases[-1]
    return ins, out


def forward_batch(model: MLPModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionError(
            f"expected [n x {model.input_dim}] inputs, got shape {X.shape}")
    return _forward_stack(model, X)[1]


def forward(model: MLPModel, x) -> np.ndarray:
    """Hidden layers are affine + rectifier; the final layer is affine."""
    v = x.values if hasattr(x, "values") else np.asarray(x, dtype=np.float64)
    if v.shape != (model.input_dim,):
        raise DimensionError(f"expected input of length {model.input_dim}, got {v.shape}")
    return forward_batch(model, v[None, :])[0]


# Downstream classifiers consume the trained embedder through this alias.
embed = forward


def loss_and_grad(model: MLPModel, X: np.ndarray, Y: np.ndarray):
    """Mean squared error over batch and output dimensions, with exact
    reverse-accumulated gradients shaped like the parameters."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionError("batch arrays must be 2-D with matching row counts")
    if X.shape[0] == 0:
        raise ConfigError("empty batch")
    if X.shape[1] != model.input_dim or Y.shape[1] != model.output_dim:
        raise DimensionError("batch dims inconsistent with the model")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise NumericError("non-finite values in the batch")

    b, d_out = Y.shape
    ins, out = _forward_stack(model, X)
    resid = out - Y
    loss = float(np.sum(resid * resid) / (b * d_out))
    delta = resid * (2.0 / (b * d_out))
    g_weights = [None] * len(model.weights)
    g_biases = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        g_weights[l] = ins[l].T @ delta
        g_biases[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l].T) * (ins[l] > 0.0)
    return loss, (g_weights, g_biases)


def mse_loss(model: MLPModel, X, Y) -> float:
    out = forward_batch(model, X)
    resid = out - np.asarray(Y, dtype=np.float64)
    return float(np.sum(resid * resid) / resid.size)


def _flatten_params(model: MLPModel) -> np.ndarray:
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _model_from_flat(params: np.ndarray, dims, init_seed: int) -> MLPModel:
    weights, biases = [], []
    off = 0
    for l in range(len(dims) - 1):
        r, c = dims[l], dims[l + 1]
        weights.append(params[off:off + r * c].reshape(r, c).copy())
        off += r * c
        biases.append(params[off:off + c].copy())
        off += c
    return MLPModel(tuple(dims), weights, biases, ACTIVATION, init_seed)


def _run_sgd(model: MLPModel, X, Y, cfg: TrainConfig, mix_prob, lam_lo, lam_hi,
             or_labels: bool, logistic: bool):
    n = X.shape[0]
    params = _flatten_params(model)
    dims = np.array(model.layer_dims, dtype=np.int64)
    rng = np.random.default_rng(derive_seed(cfg.seed, "sgd"))
    order = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (cfg.epochs, 1)), axis=1)
    uniforms = rng.random((3, cfg.epochs, n))
    losses = np.zeros(cfg.epochs)

    kernels = get_kernels()
    diverged = kernels.mlp_train_loop(
        params, dims, X, Y, order,
        uniforms[0], uniforms[1], uniforms[2],
        float(cfg.learning_rate), int(cfg.batch_size),
        float(mix_prob), float(lam_lo), float(lam_hi),
        bool(or_labels), bool(logistic), losses)
    if diverged >= 0:
        raise TrainingDivergedError(f"training loss became non-finite at epoch {diverged}")
    if not np.all(np.isfinite(params)):
        raise TrainingDivergedError("parameters non-finite after training")
    return _model_from_flat(params, model.layer_dims, model.init_seed), losses


def train_embedder(X, Y, cfg: TrainConfig, policy=None, X_val=None, Y_val=None):
    """Train the signal-to-representation regressor.

    X are flattened z-scored windows of single-analyte exposures, Y their
    target-space vectors. Each epoch reshuffles (seeded) and applies
    linear-combination augmentation per batch when a policy is given.
    epochs = 0 returns the freshly initialized model with empty history.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionError("X and Y must be 2-D with the same number of rows")
    if X.shape[0] == 0:
        raise ConfigError("empty training set")

    dims = cfg.layer_dims(X.shape[1], Y.shape[1])
    model = init_mlp(dims, cfg.seed)
    if cfg.epochs == 0:
        return model, TrainHistory()

    mix_prob = policy.mix_probability if policy is not None else 0.0
    lam_lo = policy.lambda_min if policy is not None else 0.0
    lam_hi = policy.lambda_max if policy is not None else 0.0
    model, losses = _run_sgd(model, X, Y, cfg, mix_prob, lam_lo, lam_hi,
                             or_labels=False, logistic=False)

    final_val = None
    if X_val is not None and len(X_val) > 0:
        final_val = mse_loss(model, np.asarray(X_val, dtype=np.float64),
                             np.asarray(Y_val, dtype=np.float64))
    return model, TrainHistory(losses, final_val)


def train_ffnn_baseline(X, labels, cfg: TrainConfig, policy=None) -> MLPModel:
    """Same architecture with a 1-dim output and logistic loss.

    With a policy, batches get the same linear-combination augmentation on
    inputs while labels combine with OR (positive if either constituent
    was positive). Prediction rule: output > 0.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(np.asarray(labels, dtype=np.float64).reshape(-1, 1))
    if X.shape[0] != y.shape[0]:
        raise DimensionError("X and labels must have the same length")
    if X.shape[0] == 0:
        raise ConfigError("empty training set")

    dims = cfg.layer_dims(X.shape[1], 1)
    model = init_mlp(dims, cfg.seed)
    if cfg.epochs == 0:
        return model

    mix_prob = policy.mix_probability if policy is not None else 0.0
    lam_lo = policy.lambda_min if policy is not None else 0.0
    lam_hi = policy.lambda_max if policy is not None else 0.0
    model, _ = _run_sgd(model, X, y, cfg, mix_prob, lam_lo, lam_hi,
                        or_labels=True, logistic=True)
    return model


def ffnn_predict_batch(model: MLPModel, X) -> np.ndarray:
    return forward_batch(model, X)[:, 0] > 0.0


def ffnn_predict(model: MLPModel, x) -> bool:
    return bool(forward(model, x)[0] > 0.0)


def save_model(path, model: MLPModel, extra: dict | None = None) -> None:
    """Parameter dump; load(save(m)) reproduces outputs bitwise.

    extra entries (strings, scalars, arrays) are stored under meta_ keys.
    """
    payload = {
        "layer_dims": np.array(model.layer_dims, dtype=np.int64),
        "activation": np.array(model.activation),
        "init_seed": np.array(model.init_seed, dtype=np.int64),
    }
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        payload[f"w{l}"] = w
        payload[f"b{l}"] = b
    for key, value in (extra or {}).items():
        payload[f"meta_{key}"] = np.asarray(value)
    np.savez(Path(path), **payload)


def load_model(path):
    """Returns (model, extra) where extra holds any meta_ entries."""
    with np.load(Path(path), allow_pickle=False) as data:
        dims = tuple(int(d) for d in data["layer_dims"])
        weights = [data[f"w{l}"] for l in range(len(dims) - 1)]
        biases = [data[f"b{l}"] for l in range(len(dims) - 1)]
        model = MLPModel(dims, weights, biases, str(data["activation"]),
                         int(data["init_seed"]))
        extra = {}
        for key in data.files:
            if key.startswith("meta_"):
                value = data[key]
                extra[key[5:]] = str(value) if value.dtype.kind == "U" else value
    return model, extra
