"""Pure-numpy builds of the hot kernels.

Same call signatures as `_kernels_nb`; selected via CHEMVISE_BACKEND=numpy
or automatically when numba is absent. Algorithms are identical step for
step; only reduction rounding may differ at the 1e-15 level because numpy
uses pairwise summation where the numba loops sum sequentially.
"""

from __future__ import annotations

import numpy as np


def _unpack_params(params, dims):
    """Views into the flat parameter vector, one (W, b) pair per layer."""
    weights, biases = [], []
    off = 0
    for l in range(len(dims) - 1):
        r, c = int(dims[l]), int(dims[l + 1])
        weights.append(params[off:off + r * c].reshape(r, c))
        off += r * c
        biases.append(params[off:off + c])
        off += c
    return weights, biases


def mix_batch_arrays(Xb, Yb, um, up, ul, mix_prob, lam_lo, lam_hi, or_labels):
    """Mixup of a gathered batch against its own original rows.

    Row i is replaced when um[i] < mix_prob by lam*x_i + (1-lam)*x_j with
    j a uniformly chosen distinct row. Targets blend with the same lam,
    or take the elementwise max when or_labels is set (binary labels).
    """
    b = Xb.shape[0]
    flags = um < mix_prob
    off = (up * (b - 1)).astype(np.int64)
    j = (np.arange(b) + 1 + off) % b
    lam = lam_lo + ul * (lam_hi - lam_lo)
    lamc = lam[:, None]
    Xm = lamc * Xb + (1.0 - lamc) * Xb[j]
    if or_labels:
        Ym = np.maximum(Yb, Yb[j])
    else:
        Ym = lamc * Yb + (1.0 - lamc) * Yb[j]
    sel = flags[:, None]
    return np.where(sel, Xm, Xb), np.where(sel, Ym, Yb)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_train_loop(params, dims, X, Y, order, u_mix, u_part, u_lam,
                   lr, batch_size, mix_prob, lam_lo, lam_hi,
                   or_labels, logistic, losses):
    """Minibatch SGD over a flat parameter vector; returns the epoch index
    at which the loss went non-finite, or -1 on clean completion."""
    weights, biases = _unpack_params(params, dims)
    n = X.shape[0]
    n_layers = len(weights)
    d_out = int(dims[-1])
    epochs = order.shape[0]

    for e in range(epochs):
        total = 0.0
        for start in range(0, n, batch_size):
            end = min(start + batch_size, n)
            idx = order[e, start:end]
            b = end - start
            Xb = X[idx]
            Yb = Y[idx]
            if mix_prob > 0.0 and b >= 2:
                Xb, Yb = mix_batch_arrays(
                    Xb, Yb,
                    u_mix[e, start:end], u_part[e, start:end],
                    u_lam[e, start:end],
                    mix_prob, lam_lo, lam_hi, or_labels)

            ins = [Xb]
            cur = Xb
            for l in range(n_layers - 1):
                cur = np.maximum(cur @ weights[l] + biases[l], 0.0)
                ins.append(cur)
            out = cur @ weights[-1] + biases[-1]

            if logistic:
                z = out[:, 0]
                y = Yb[:, 0]
                t = 2.0 * y - 1.0
                u = -t * z
                loss = float(np.mean(np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))))
                delta = ((_sigmoid(z) - y) / b)[:, None]
            else:
                resid = out - Yb
                loss = float(np.sum(resid * resid) / (b * d_out))
                delta = resid * (2.0 / (b * d_out))

            for l in range(n_layers - 1, -1, -1):
                gw = ins[l].T @ delta
                gb = delta.sum(axis=0)
                if l > 0:
                    delta = (delta @ weights[l].T) * (ins[l] > 0.0)
                weights[l] -= lr * gw
                biases[l] -= lr * gb

            total += loss * b
        losses[e] = total / n
        if not np.isfinite(losses[e]):
            return e
    return -1


def svc_subgradient(X, y, sw, c_penalty, order, w0, b0):
    """Projected stochastic subgradient descent with iterate averaging on
    0.5*||w||^2 + C * sum_i sw_i * hinge(y_i, w.x_i + b).

    Steps use eta_t = 1/t, project w onto the ball of radius
    sqrt(2*C*sum(sw)) implied by the objective at w=0, and return the
    average of all iterates.
    """
    n = X.shape[0]
    cn = c_penalty * n
    radius = np.sqrt(2.0 * c_penalty * float(np.sum(sw)))
    w = w0.copy()
    b = float(b0)
    w_sum = np.zeros_like(w)
    b_sum = 0.0
    steps = order.shape[0]
    for t in range(1, steps + 1):
        i = order[t - 1]
        eta = 1.0 / t
        margin = y[i] * (float(w @ X[i]) + b)
        w *= 1.0 - eta
        if margin < 1.0:
            coef = eta * cn * sw[i] * y[i]
            w += coef * X[i]
            b += coef
        norm = np.sqrt(float(w @ w))
        if norm > radius:
            w *= radius / norm
        w_sum += w
        b_sum += b
    return w_sum / steps, b_sum / steps


def jacobi_eigh(A, tol, max_sweeps):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns (eigenvalues, eigenvector columns, sweeps used); sweeps equals
    max_sweeps + 1 when the off-diagonal norm did not reach tol.
    """
    A = A.copy()
    m = A.shape[0]
    V = np.eye(m)
    if m == 1:
        return np.array([A[0, 0]]), V, 0

    def offdiag_norm():
        return np.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diag(A) ** 2)))

    sweeps = 0
    while sweeps < max_sweeps:
        if offdiag_norm() <= tol:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
        sweeps += 1
    else:
        if offdiag_norm() > tol:
            sweeps = max_sweeps + 1
    return np.diag(A).copy(), V, sweeps
