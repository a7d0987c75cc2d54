"""Relaxed permutation matrices for sorting scores in descending order.

Row ``i`` of the relaxed matrix is a softmax over documents giving the
weight each document has at rank ``i``. As the temperature goes to zero the
matrix tends to the hard sorting permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Var
from .metrics import ranking_order

EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class RelaxedPermutation:
    matrix: np.ndarray | Var
    temperature: float
    scaled: bool = False

    @property
    def values(self) -> np.ndarray:
        return ad.value_of(self.matrix)


@dataclass(frozen=True)
class GumbelNoise:
    """Zero-mean Gumbel perturbation of the scores, ``samples`` draws per call."""

    scale: float = 1.0
    seed: int = 0
    samples: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("GumbelNoise.samples must be at least 1")
        if not self.scale > 0:
            raise ValueError("GumbelNoise.scale must be positive")


class SinkhornResult(NamedTuple):
    matrix: np.ndarray | Var
    iterations: int
    error: float


def _check_scores(s):
    vals = ad.value_of(s)
    if vals.ndim != 1 or vals.shape[0] < 1:
        raise ValueError(f"scores must be a non-empty vector, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("scores must be finite")
    return vals.shape[0]


def pairwise_abs_diff(s):
    """|s_i - s_j| for all pairs."""
    n = _check_scores(s)
    if isinstance(s, Var):
        return ad.abs(ad.reshape(s, (n, 1)) - ad.reshape(s, (1, n)))
    return kernels.pairwise_abs_diff(s)


def _neural_sort_logits_scale(n: int) -> np.ndarray:
    return (n + 1 - 2 * np.arange(1, n + 1, dtype=np.float64)).reshape(n, 1)


def neural_sort(s, tau: float = 1.0) -> RelaxedPermutation:
    """Row-stochastic relaxation of the descending-sort permutation matrix.

    Row i (one-based) is ``softmax(((n + 1 - 2i) * s - A_s @ 1) / tau)`` with
    ``A_s[i, j] = |s_i - s_j|``. Differentiable when ``s`` is a Var.
    """
    if not (tau > 0 and np.isfinite(tau)):
        raise ValueError(f"temperature must be positive and finite, got {tau}")
    n = _check_scores(s)
    if not isinstance(s, Var):
        return RelaxedPermutation(kernels.neural_sort_matrix(s, tau), tau)

    spread = ad.sum_axis(pairwise_abs_diff(s), 1)
    logits = _neural_sort_logits_scale(n) * ad.reshape(s, (1, n)) - ad.reshape(spread, (1, n))
    return RelaxedPermutation(ad.softmax_rows(ad.scalar_mul(logits, 1.0 / tau)), tau)


def stochastic_neural_sort(s, tau: float, noise: GumbelNoise) -> list[RelaxedPermutation]:
    """Relaxed sorts of Gumbel-perturbed scores.

    Scores are treated as Plackett-Luce log-strengths: each sample sorts
    ``s + scale * (g - euler_gamma)`` with ``g`` standard Gumbel, so the
    perturbation has zero mean. Gradients pass through ``s`` unchanged.
    """
    n = _check_scores(s)
    rng = np.random.default_rng(noise.seed)
    out = []
    for _ in range(noise.samples):
        g = rng.gumbel(size=n) - EULER_GAMMA
        out.append(neural_sort(s + noise.scale * g, tau))
    return out


def permutation_matrix(s) -> np.ndarray:
    """Hard sorting permutation, same row convention as :func:`neural_sort`."""
    s = ad.value_of(s)
    n = s.shape[0]
    p = np.zeros((n, n))
    p[np.arange(n), ranking_order(s)] = 1.0
    return p


def _stochasticity_error(m: np.ndarray) -> float:
    return float(max(np.abs(m.sum(axis=1) - 1.0).max(), np.abs(m.sum(axis=0) - 1.0).max()))


def sinkhorn_scale(m, max_iter: int = 30, tol: float = 1e-6) -> SinkhornResult:
    """Alternately normalise rows then columns.

    Stops once every row and column sum is within ``tol`` of one, or after
    ``max_iter`` iterations. On a Var the executed iterations are unrolled on
    the tape, so the gradient is exact for the procedure actually run.
    """
    vals = ad.value_of(m)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError(f"sinkhorn_scale needs a square matrix, got {vals.shape}")
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("sinkhorn_scale needs finite non-negative entries")
    if np.any(vals.sum(axis=0) <= 0) or np.any(vals.sum(axis=1) <= 0):
        raise ValueError("sinkhorn_scale needs every row and column to have positive mass")

    if not isinstance(m, Var):
        out, it, err = kernels.sinkhorn(vals, max_iter, tol)
        return SinkhornResult(out, it, err)

    err = _stochasticity_error(vals)
    it = 0
    while err >= tol and it < max_iter:
        m = ad.div(m, ad.sum_axis(m, 1, keepdims=True))
        m = ad.div(m, ad.sum_axis(m, 0, keepdims=True))
        it += 1
        err = _stochasticity_error(m.value)
    return SinkhornResult(m, it, err)


def scale_permutation(p: RelaxedPermutation, max_iter: int = 30, tol: float = 1e-6) -> RelaxedPermutation:
    res = sinkhorn_scale(p.matrix, max_iter, tol)
    return RelaxedPermutation(res.matrix, p.temperature, scaled=True)
