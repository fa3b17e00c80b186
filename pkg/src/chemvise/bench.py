"""Benchmark the numba kernels against the pure-numpy fallback.

Runs desk-scale workloads for each hot kernel on both backends, checks
that outputs agree, and prints a timing table.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels_py
from .backend import numba_available


def _workloads():
    rng = np.random.default_rng(42)

    n, d_in, d_out, width = 80, 960, 512, 128
    dims = np.array([d_in, width, width, width, d_out], dtype=np.int64)
    n_params = int(sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1)))
    params = rng.standard_normal(n_params) * 0.02
    X = rng.standard_normal((n, d_in))
    Y = rng.standard_normal((n, d_out)) * 0.05
    epochs = 60
    order = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (epochs, 1)), axis=1)
    u = rng.random((3, epochs, n))

    def mlp(k):
        p = params.copy()
        losses = np.zeros(epochs)
        k.mlp_train_loop(p, dims, X, Y, order, u[0], u[1], u[2],
                         1e-3, 16, 0.5, 0.3, 0.7, False, False, losses)
        return losses

    n_svc, d_svc, steps = 160, 960, 50_000
    Xs = rng.standard_normal((n_svc, d_svc))
    ys = np.where(rng.random(n_svc) > 0.5, 1.0, -1.0)
    Xs += 0.4 * ys[:, None]
    sw = np.where(ys > 0, 2.0, 1.0)
    n_epochs = -(-steps // n_svc)
    svc_order = rng.permuted(np.tile(np.arange(n_svc, dtype=np.int64), (n_epochs, 1)),
                             axis=1).reshape(-1)[:steps].copy()

    def svc(k):
        w, b = k.svc_subgradient(Xs, ys, sw, 0.004, svc_order,
                                 np.zeros(d_svc), 0.0)
        return np.append(w, b)

    m = 160
    B = rng.standard_normal((m, m))
    A = (B + B.T) / 2.0

    def jacobi(k):
        vals, vecs, _ = k.jacobi_eigh(A, 1e-12 * np.linalg.norm(A), 100)
        return np.sort(vals)

    return [("mlp_train_loop", mlp), ("svc_subgradient", svc), ("jacobi_eigh", jacobi)]


def _time(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run_benchmark(repeats: int = 3) -> None:
    if not numba_available():
        print("numba not importable; only the numpy backend is available")
        for name, work in _workloads():
            t, _ = _time(lambda: work(_kernels_py), repeats)
            print(f"{name:<18} numpy {t * 1e3:9.1f} ms")
        return

    from . import _kernels_nb

    print(f"{'kernel':<18} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}  agreement")
    for name, work in _workloads():
        work(_kernels_nb)  # compile outside the timed region
        t_nb, out_nb = _time(lambda: work(_kernels_nb), repeats)
        t_py, out_py = _time(lambda: work(_kernels_py), repeats)
        scale = max(1.0, float(np.max(np.abs(out_py))))
        err = float(np.max(np.abs(out_nb - out_py))) / scale
        print(f"{name:<18} {t_nb * 1e3:12.1f} {t_py * 1e3:12.1f} "
              f"{t_py / t_nb:9.2f}x  max rel diff {err:.2e}")
