"""Hot O(n^2) kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly, unless the environment
variable ``RELAXRANK_DISABLE_NUMBA`` is set to a non-empty value other than
``0``. Both paths take and return float64 arrays and agree to rounding.
"""

import os

import numpy as np

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # numba missing or broken
    numba_impl = None

__all__ = [
    "BACKEND",
    "numpy_impl",
    "numba_impl",
    "pairwise_abs_diff",
    "neural_sort_matrix",
    "softmax_rows",
    "softmax_rows_vjp",
    "sinkhorn",
    "swap_delta_ndcg",
    "lambda_gradients",
]


def _numba_requested():
    flag = os.environ.get("RELAXRANK_DISABLE_NUMBA", "")
    return flag in ("", "0")


_impl = numba_impl if (numba_impl is not None and _numba_requested()) else numpy_impl
BACKEND = "numba" if _impl is numba_impl else "numpy"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def pairwise_abs_diff(s):
    return _impl.pairwise_abs_diff(_f64(s))


def neural_sort_matrix(s, tau):
    return _impl.neural_sort_matrix(_f64(s), float(tau))


def softmax_rows(x):
    return _impl.softmax_rows(_f64(x))


def softmax_rows_vjp(y, g):
    return _impl.softmax_rows_vjp(_f64(y), _f64(g))


def sinkhorn(m, max_iter, tol):
    out, it, err = _impl.sinkhorn(_f64(m), int(max_iter), float(tol))
    return out, int(it), float(err)


def swap_delta_ndcg(gains, positions, discounts, inv_max_dcg):
    return _impl.swap_delta_ndcg(
        _f64(gains), np.ascontiguousarray(positions, dtype=np.int64), _f64(discounts), float(inv_max_dcg)
    )


def lambda_gradients(s, labels, delta):
    return _impl.lambda_gradients(_f64(s), _f64(labels), _f64(delta))
