"""Linear-combination augmentation of training pairs.

Approximate double-analyte samples are synthesized as convex combinations
of two single-analyte samples and of their targets, with the mixing
weight drawn uniformly from [lambda_min, lambda_max] instead of the Beta
draw used for natural images; bounding lambda away from 0 and 1 keeps
both constituents at a meaningful concentration, which justifies labeling
a mixed sample positive whenever either constituent is.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels_py import mix_batch_arrays
from .errors import ConfigError, DimensionError, SingletonBatchWarning
from .signals import FeatureVector


@dataclass(frozen=True)
class MixPolicy:
    lambda_min: float = 0.3
    lambda_max: float = 0.7
    mix_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_min <= self.lambda_max <= 1.0:
            raise ConfigError(
                f"need 0 <= lambda_min <= lambda_max <= 1, got "
                f"[{self.lambda_min}, {self.lambda_max}]")
        if not 0.0 <= self.mix_probability <= 1.0:
            raise ConfigError(f"mix_probability must be in [0, 1], got {self.mix_probability}")


def sample_lambda(policy: MixPolicy, rng: np.random.Generator) -> float:
    """One mixing weight, uniform on [lambda_min, lambda_max]."""
    return policy.lambda_min + rng.random() * (policy.lambda_max - policy.lambda_min)


def mix_pair(x_i, y_i, x_j, y_j, lam: float):
    """x_bar = lam*x_i + (1-lam)*x_j and the same combination of targets."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    xi, xj = _values(x_i), _values(x_j)
    yi, yj = np.asarray(y_i, dtype=np.float64), np.asarray(y_j, dtype=np.float64)
    if xi.shape != xj.shape:
        raise DimensionError(f"feature shapes differ: {xi.shape} vs {xj.shape}")
    if yi.shape != yj.shape:
        raise DimensionError(f"target shapes differ: {yi.shape} vs {yj.shape}")
    x_bar = lam * xi + (1.0 - lam) * xj
    y_bar = lam * yi + (1.0 - lam) * yj
    if isinstance(x_i, FeatureVector) and isinstance(x_j, FeatureVector):
        prov = f"mix({x_i.provenance},{x_j.provenance})"
        x_bar = FeatureVector(x_bar, x_i.window_length_s, prov)
    return x_bar, y_bar


def _values(x):
    return x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)


def augment_batch(batch, policy: MixPolicy, rng: np.random.Generator):
    """Mix each element, with probability mix_probability, against a
    uniformly chosen distinct partner from the same (original) batch.

    Output length equals input length. A singleton batch passes through
    with a SingletonBatchWarning when mixing was requested.
    """
    batch = list(batch)
    n = len(batch)
    if n == 0 or policy.mix_probability == 0.0:
        return batch
    if n == 1:
        warnings.warn("cannot mix a batch of size 1; passing through",
                      SingletonBatchWarning, stacklevel=2)
        return batch

    X = np.stack([_values(x) for x, _ in batch])
    Y = np.stack([np.asarray(y, dtype=np.float64) for _, y in batch])
    u = rng.random((3, n))
    Xm, Ym = mix_batch_arrays(X, Y, u[0], u[1], u[2],
                              policy.mix_probability,
                              policy.lambda_min, policy.lambda_max,
                              or_labels=False)
    out = []
    for i, (x, _) in enumerate(batch):
        if isinstance(x, FeatureVector):
            out.append((FeatureVector(Xm[i], x.window_length_s, x.provenance), Ym[i]))
        else:
            out.append((Xm[i], Ym[i]))
    return out


def binary_label_of_mix(components_a, components_b, lam: float,
                        target_analyte: str) -> bool:
    """Label for a mixed sample: positive iff either constituent contains
    the target analyte. Sound because the lambda bounds guarantee each
    constituent keeps weight >= lambda_min."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")

    def _contains(components):
        if hasattr(components, "contains"):
            return components.contains(target_analyte)
        return any(a == target_analyte for a, _ in components)

    return _contains(components_a) or _contains(components_b)
