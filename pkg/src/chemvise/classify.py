"""Downstream classifiers and metrics for the representation space.

Linear SVC trained by deterministic projected subgradient descent with
iterate averaging, k-nearest-neighbors with index tie-breaking, 2-D PCA
via cyclic Jacobi diagonalization (Gram duality when dimensions exceed
samples), confusion counts, and the Matthews correlation coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .errors import ConfigError, DegenerateDataError, DimensionError, NumericError
from .util import derive_seed

SVC_DEFAULT_STEPS = 50_000
JACOBI_MAX_SWEEPS = 100
_VARIANCE_FLOOR = 1e-12


@dataclass
class LinearSVCModel:
    weight: np.ndarray
    bias: float
    c_penalty: float
    class_weight_ratio: float


def train_linear_svc(X, y, c_penalty: float, class_weight_ratio: float,
                     seed: int, n_steps: int = SVC_DEFAULT_STEPS) -> LinearSVCModel:
    """Minimize 0.5*||w||^2 + C * sum_i w_i * hinge(y_i, w.x_i + b).

    Positive samples carry weight class_weight_ratio, negatives weight 1.
    The solver takes n_steps subgradient steps at rate 1/t over seeded
    shuffled sample orders, projects onto the norm ball implied by the
    objective at zero, and returns the average of all iterates.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError("X must be [n x d] with one label per row")
    if c_penalty <= 0:
        raise ConfigError(f"c_penalty must be positive, got {c_penalty}")
    if class_weight_ratio < 1:
        raise ConfigError(f"class_weight_ratio must be >= 1, got {class_weight_ratio}")
    if n_steps < 1:
        raise ConfigError("n_steps must be positive")
    n = X.shape[0]
    if not (y.any() and (~y).any()):
        raise DegenerateDataError("training data must contain both classes")

    y_signed = np.where(y, 1.0, -1.0)
    sample_weight = np.where(y, float(class_weight_ratio), 1.0)

    rng = np.random.default_rng(derive_seed(seed, "svc"))
    n_epochs = -(-n_steps // n)
    order = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (n_epochs, 1)),
                         axis=1).reshape(-1)[:n_steps]
    order = np.ascontiguousarray(order)

    kernels = get_kernels()
    w, b = kernels.svc_subgradient(X, y_signed, sample_weight, float(c_penalty),
                                   order, np.zeros(X.shape[1]), 0.0)
    return LinearSVCModel(weight=w, bias=float(b), c_penalty=float(c_penalty),
                          class_weight_ratio=float(class_weight_ratio))


def svc_decision(model: LinearSVCModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weight.shape:
        raise DimensionError(f"expected input of shape {model.weight.shape}, got {x.shape}")
    return float(model.weight @ x + model.bias)


def svc_predict(model: LinearSVCModel, x) -> bool:
    """Strict rule: boundary points (decision exactly 0) are negative."""
    return svc_decision(model, x) > 0.0


def svc_predict_batch(model: LinearSVCModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weight.shape[0]:
        raise DimensionError(f"expected [n x {model.weight.shape[0]}] inputs")
    return (X @ model.weight + model.bias) > 0.0


def knn_predict(train_embeds, train_labels, query, k: int) -> bool:
    """Majority label of the k Euclidean nearest neighbors.

    k must be odd (no voting ties); distance ties resolve to the lower
    sample index via a stable sort.
    """
    X = np.asarray(train_embeds, dtype=np.float64)
    labels = np.asarray(train_labels, dtype=bool)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise DimensionError("train_embeds must be [n x d] with one label per row")
    if X.shape[0] == 0:
        raise DegenerateDataError("empty training set")
    if k < 1 or k > X.shape[0]:
        raise ConfigError(f"k must be in [1, {X.shape[0]}], got {k}")
    if k % 2 == 0:
        raise ConfigError(f"k must be odd to avoid voting ties, got {k}")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (X.shape[1],):
        raise DimensionError(f"query must have dimension {X.shape[1]}")
    d2 = ((X - q[None, :]) ** 2).sum(axis=1)
    nearest = np.argsort(d2, kind="stable")[:k]
    votes = int(labels[nearest].sum())
    return votes * 2 > k


def knn_predict_batch(train_embeds, train_labels, queries, k: int) -> np.ndarray:
    return np.array([knn_predict(train_embeds, train_labels, q, k)
                     for q in np.asarray(queries, dtype=np.float64)])


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray          # [n_components x d], orthonormal rows
    explained_variance: np.ndarray  # non-increasing


def _jacobi(matrix: np.ndarray):
    kernels = get_kernels()
    scale = max(1.0, float(np.linalg.norm(matrix)))
    vals, vecs, sweeps = kernels.jacobi_eigh(
        np.ascontiguousarray(matrix), 1e-12 * scale, JACOBI_MAX_SWEEPS)
    if sweeps > JACOBI_MAX_SWEEPS:
        raise NumericError("Jacobi eigendecomposition failed to converge")
    return vals, vecs


def _fix_sign(component: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(component)))
    return -component if component[idx] < 0 else component


def pca_fit(X, n_components: int = 2) -> PCAModel:
    """Top principal components of mean-centered data.

    Eigenvectors come from cyclic Jacobi on the covariance (or, when the
    feature dimension exceeds the sample count, on the sample Gram matrix
    via standard PCA duality). Sign convention: the largest-magnitude
    entry of each component is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DimensionError("need at least 2 samples in a 2-D array")
    n, d = X.shape
    if not 1 <= n_components <= d:
        raise ConfigError(f"n_components must be in [1, {d}], got {n_components}")
    mean = X.mean(axis=0)
    xc = X - mean[None, :]
    total_var = float(np.sum(xc * xc)) / (n - 1)
    if total_var < _VARIANCE_FLOOR:
        raise DegenerateDataError("zero-variance data")

    if d <= n:
        cov = (xc.T @ xc) / (n - 1)
        vals, vecs = _jacobi(cov)
        top = np.argsort(vals, kind="stable")[::-1][:n_components]
        components = np.stack([_fix_sign(vecs[:, i]) for i in top])
        explained = np.maximum(vals[top], 0.0)
    else:
        gram = (xc @ xc.T) / (n - 1)
        vals, vecs = _jacobi(gram)
        top = np.argsort(vals, kind="stable")[::-1][:n_components]
        if vals[top[-1]] <= _VARIANCE_FLOOR * max(1.0, vals[top[0]]):
            raise DegenerateDataError(
                f"data rank below {n_components}; cannot recover components via duality")
        rows = []
        for i in top:
            u = vecs[:, i]
            comp = xc.T @ u / np.sqrt(vals[i] * (n - 1))
            rows.append(_fix_sign(comp))
        components = np.stack(rows)
        explained = vals[top]
    return PCAModel(mean=mean, components=components,
                    explained_variance=explained)


def pca_transform(model: PCAModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.mean.shape:
        raise DimensionError(f"expected input of shape {model.mean.shape}, got {x.shape}")
    return model.components @ (x - model.mean)


def pca_transform_batch(model: PCAModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - model.mean[None, :]) @ model.components.T


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if v < 0 or v != int(v):
                raise ConfigError(f"{name} must be a non-negative integer, got {v}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0


def confusion(preds, labels) -> ConfusionCounts:
    preds = np.asarray(preds, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if preds.shape != labels.shape:
        raise DimensionError(f"length mismatch: {preds.shape} vs {labels.shape}")
    return ConfusionCounts(
        tp=int(np.sum(preds & labels)),
        fp=int(np.sum(preds & ~labels)),
        tn=int(np.sum(~preds & ~labels)),
        fn=int(np.sum(~preds & labels)),
    )


def mcc(counts: ConfusionCounts) -> float:
    """Matthews correlation coefficient; 0 when any denominator factor is
    zero (the standard convention)."""
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)
