"""Loop kernels compiled with numba. Same signatures as ``_numpy``."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def pairwise_abs_diff(s):
    n = s.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        out[i, i] = 0.0
        for j in range(i + 1, n):
            v = abs(s[i] - s[j])
            out[i, j] = v
            out[j, i] = v
    return out


@njit(cache=True)
def neural_sort_matrix(s, tau):
    n = s.shape[0]
    spread = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += abs(s[i] - s[j])
        spread[i] = acc
    p = np.empty((n, n))
    for i in range(n):
        scale = n - 1 - 2 * i
        top = -np.inf
        for j in range(n):
            v = (scale * s[j] - spread[j]) / tau
            p[i, j] = v
            if v > top:
                top = v
        total = 0.0
        for j in range(n):
            e = math.exp(p[i, j] - top)
            p[i, j] = e
            total += e
        for j in range(n):
            p[i, j] /= total
    return p


@njit(cache=True)
def softmax_rows(x):
    rows, cols = x.shape
    out = np.empty((rows, cols))
    for i in range(rows):
        top = -np.inf
        for j in range(cols):
            if x[i, j] > top:
                top = x[i, j]
        total = 0.0
        for j in range(cols):
            e = math.exp(x[i, j] - top)
            out[i, j] = e
            total += e
        for j in range(cols):
            out[i, j] /= total
    return out


@njit(cache=True)
def softmax_rows_vjp(y, g):
    rows, cols = y.shape
    out = np.empty((rows, cols))
    for i in range(rows):
        dot = 0.0
        for j in range(cols):
            dot += g[i, j] * y[i, j]
        for j in range(cols):
            out[i, j] = y[i, j] * (g[i, j] - dot)
    return out


@njit(cache=True)
def _sinkhorn_error(m):
    rows, cols = m.shape
    err = 0.0
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += m[i, j]
        err = max(err, abs(acc - 1.0))
    for j in range(cols):
        acc = 0.0
        for i in range(rows):
            acc += m[i, j]
        err = max(err, abs(acc - 1.0))
    return err


@njit(cache=True)
def sinkhorn(m, max_iter, tol):
    m = m.copy()
    rows, cols = m.shape
    err = _sinkhorn_error(m)
    it = 0
    col_sum = np.empty(cols)
    while err >= tol and it < max_iter:
        for i in range(rows):
            acc = 0.0
            for j in range(cols):
                acc += m[i, j]
            for j in range(cols):
                m[i, j] /= acc
        col_sum[:] = 0.0
        for i in range(rows):
            for j in range(cols):
                col_sum[j] += m[i, j]
        for i in range(rows):
            for j in range(cols):
                m[i, j] /= col_sum[j]
        it += 1
        err = _sinkhorn_error(m)
    return m, it, err


@njit(cache=True)
def swap_delta_ndcg(gains, positions, discounts, inv_max_dcg):
    n = gains.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        di = discounts[positions[i]]
        for j in range(n):
            dj = discounts[positions[j]]
            out[i, j] = abs((gains[i] - gains[j]) * (di - dj)) * inv_max_dcg
    return out


@njit(cache=True)
def lambda_gradients(s, labels, delta):
    n = s.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if labels[i] == labels[j]:
                continue
            sign = 1.0 if labels[i] > labels[j] else -1.0
            z = -sign * (s[i] - s[j])
            acc += sign * delta[i, j] * 0.5 * (1.0 + math.tanh(0.5 * z))
        out[i] = -acc
    return out
