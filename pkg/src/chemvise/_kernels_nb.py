"""Numba builds of the hot kernels (see `_kernels_py` for the contracts).

Compiled lazily on first call and cached on disk. Loops mirror the numpy
build operation for operation so both backends agree to float rounding.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid_scalar(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def mlp_train_loop(params, dims, X, Y, order, u_mix, u_part, u_lam,
                   lr, batch_size, mix_prob, lam_lo, lam_hi,
                   or_labels, logistic, losses):
    n_layers = dims.shape[0] - 1
    weights = []
    biases = []
    off = 0
    for l in range(n_layers):
        r = int(dims[l])
        c = int(dims[l + 1])
        weights.append(params[off:off + r * c].reshape(r, c))
        off += r * c
        biases.append(params[off:off + c])
        off += c

    n = X.shape[0]
    d_in = X.shape[1]
    d_out = int(dims[n_layers])
    epochs = order.shape[0]

    for e in range(epochs):
        total = 0.0
        for start in range(0, n, batch_size):
            end = min(start + batch_size, n)
            b = end - start
            Xb = np.empty((b, d_in))
            Yb = np.empty((b, d_out))
            for r in range(b):
                src = order[e, start + r]
                for col in range(d_in):
                    Xb[r, col] = X[src, col]
                for col in range(d_out):
                    Yb[r, col] = Y[src, col]

            if mix_prob > 0.0 and b >= 2:
                Xo = Xb.copy()
                Yo = Yb.copy()
                for r in range(b):
                    if u_mix[e, start + r] < mix_prob:
                        offset = int(u_part[e, start + r] * (b - 1))
                        if offset > b - 2:
                            offset = b - 2
                        j = (r + 1 + offset) % b
                        lam = lam_lo + u_lam[e, start + r] * (lam_hi - lam_lo)
                        for col in range(d_in):
                            Xb[r, col] = lam * Xo[r, col] + (1.0 - lam) * Xo[j, col]
                        if or_labels:
                            for col in range(d_out):
                                Yb[r, col] = max(Yo[r, col], Yo[j, col])
                        else:
                            for col in range(d_out):
                                Yb[r, col] = lam * Yo[r, col] + (1.0 - lam) * Yo[j, col]

            ins = [Xb]
            cur = Xb
            for l in range(n_layers - 1):
                z = np.dot(cur, weights[l])
                h = np.maximum(z + biases[l], 0.0)
                ins.append(h)
                cur = h
            out = np.dot(cur, weights[n_layers - 1]) + biases[n_layers - 1]

            delta = np.empty((b, d_out))
            loss = 0.0
            if logistic:
                for r in range(b):
                    z = out[r, 0]
                    y = Yb[r, 0]
                    t = 2.0 * y - 1.0
                    u = -t * z
                    loss += max(u, 0.0) + np.log1p(np.exp(-abs(u)))
                    delta[r, 0] = (_sigmoid_scalar(z) - y) / b
                loss /= b
            else:
                scale = 2.0 / (b * d_out)
                for r in range(b):
                    for col in range(d_out):
                        resid = out[r, col] - Yb[r, col]
                        loss += resid * resid
                        delta[r, col] = resid * scale
                loss /= b * d_out

            for l in range(n_layers - 1, -1, -1):
                a_in = ins[l]
                gw = np.dot(np.ascontiguousarray(a_in.T), delta)
                gb = np.sum(delta, axis=0)
                if l > 0:
                    back = np.dot(delta, np.ascontiguousarray(weights[l].T))
                    delta = np.where(a_in > 0.0, back, 0.0)
                weights[l] -= lr * gw
                biases[l] -= lr * gb

            total += loss * b
        losses[e] = total / n
        if not np.isfinite(losses[e]):
            return e
    return -1


@njit(cache=True)
def svc_subgradient(X, y, sw, c_penalty, order, w0, b0):
    n = X.shape[0]
    d = X.shape[1]
    cn = c_penalty * n
    total_weight = 0.0
    for i in range(n):
        total_weight += sw[i]
    radius = np.sqrt(2.0 * c_penalty * total_weight)

    w = w0.copy()
    b = b0
    w_sum = np.zeros(d)
    b_sum = 0.0
    steps = order.shape[0]
    for t in range(1, steps + 1):
        i = order[t - 1]
        eta = 1.0 / t
        margin = y[i] * (np.dot(w, X[i]) + b)
        for col in range(d):
            w[col] *= 1.0 - eta
        if margin < 1.0:
            coef = eta * cn * sw[i] * y[i]
            for col in range(d):
                w[col] += coef * X[i, col]
            b += coef
        norm = np.sqrt(np.dot(w, w))
        if norm > radius:
            scale = radius / norm
            for col in range(d):
                w[col] *= scale
        for col in range(d):
            w_sum[col] += w[col]
        b_sum += b
    return w_sum / steps, b_sum / steps


@njit(cache=True)
def _offdiag_norm(A):
    m = A.shape[0]
    acc = 0.0
    for p in range(m):
        for q in range(m):
            if p != q:
                acc += A[p, q] * A[p, q]
    return np.sqrt(acc)


@njit(cache=True)
def jacobi_eigh(A, tol, max_sweeps):
    A = A.copy()
    m = A.shape[0]
    V = np.eye(m)
    if m == 1:
        return np.diag(A).copy(), V, 0

    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        if _offdiag_norm(A) <= tol:
            converged = True
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta != 0.0:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for r in range(m):
                    a_rp = A[r, p]
                    a_rq = A[r, q]
                    A[r, p] = c * a_rp - s * a_rq
                    A[r, q] = s * a_rp + c * a_rq
                for r in range(m):
                    a_pr = A[p, r]
                    a_qr = A[q, r]
                    A[p, r] = c * a_pr - s * a_qr
                    A[q, r] = s * a_pr + c * a_qr
                A[p, q] = 0.0
                A[q, p] = 0.0
                for r in range(m):
                    v_rp = V[r, p]
                    v_rq = V[r, q]
                    V[r, p] = c * v_rp - s * v_rq
                    V[r, q] = s * v_rp + c * v_rq
        sweeps += 1
    if not converged and _offdiag_norm(A) > tol:
        sweeps = max_sweeps + 1
    return np.diag(A).copy(), V, sweeps
