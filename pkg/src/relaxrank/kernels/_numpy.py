"""Vectorised numpy kernels. Reference path, and the fallback when numba is off."""

import numpy as np


def pairwise_abs_diff(s):
    return np.abs(s[:, None] - s[None, :])


def neural_sort_matrix(s, tau):
    n = s.shape[0]
    row_scale = (n + 1 - 2 * np.arange(1, n + 1)).astype(np.float64)
    spread = np.abs(s[:, None] - s[None, :]).sum(axis=1)
    logits = (row_scale[:, None] * s[None, :] - spread[None, :]) / tau
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return p


def softmax_rows(x):
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_vjp(y, g):
    return y * (g - (g * y).sum(axis=1, keepdims=True))


def sinkhorn(m, max_iter, tol):
    """Alternating row/column normalisation. Returns (matrix, iterations, error)."""
    m = m.copy()
    err = _sinkhorn_error(m)
    it = 0
    while err >= tol and it < max_iter:
        m /= m.sum(axis=1, keepdims=True)
        m /= m.sum(axis=0, keepdims=True)
        it += 1
        err = _sinkhorn_error(m)
    return m, it, err


def _sinkhorn_error(m):
    return max(np.abs(m.sum(axis=1) - 1.0).max(), np.abs(m.sum(axis=0) - 1.0).max())


def swap_delta_ndcg(gains, positions, discounts, inv_max_dcg):
    """|NDCG change| from swapping documents i and j in the current ranking.

    ``positions[i]`` is the zero-based rank of document i and ``discounts`` is
    indexed by rank, already zeroed past the cutoff.
    """
    d = discounts[positions]
    return np.abs((gains[:, None] - gains[None, :]) * (d[:, None] - d[None, :])) * inv_max_dcg


def lambda_gradients(s, labels, delta):
    diff_label = labels[:, None] - labels[None, :]
    sign = np.sign(diff_label)
    z = -sign * (s[:, None] - s[None, :])
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))
    lam = (sign * delta * sig).sum(axis=1)
    return -lam
