"""Ranking losses over one query.

All losses take scores ``s`` (a Var for gradients, or a plain array for the
value only), integer labels ``y`` and an optional boolean ``mask`` marking
real documents. Padded documents are dropped before anything else is
computed. Losses are minimised, so the NDCG-style ones return the negated
metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .metrics import discount_vector, gain, max_dcg_at_k, parse_cutoff, ranking_order
from .relaxed_sort import GumbelNoise, neural_sort, sinkhorn_scale, stochastic_neural_sort

LOSS_KINDS = (
    "neural_ndcg",
    "neural_ndcg_t",
    "approx_ndcg",
    "listnet",
    "listmle",
    "ranknet",
    "lambdarank",
    "rmse",
)
# lambdarank has no scalar loss, only direct gradients
DIFFERENTIABLE_KINDS = tuple(k for k in LOSS_KINDS if k != "lambdarank")


class EmptyQueryError(ValueError):
    """The query has no relevant document, so NDCG-based losses are undefined."""


@dataclass(frozen=True)
class LossConfig:
    kind: str = "neural_ndcg"
    k: int | None = None
    temperature: float = 1.0
    alpha: float = 1.0
    stochastic: GumbelNoise | None = None
    sinkhorn: bool = True
    levels: int = 4

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {', '.join(LOSS_KINDS)}")
        object.__setattr__(self, "k", parse_cutoff(self.k))
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.levels < 1:
            raise ValueError("levels must be positive")


def _select(s, y, mask):
    y = np.asarray(y)
    if ad.value_of(s).shape != y.shape:
        raise ValueError(f"scores and labels differ in shape: {ad.value_of(s).shape} vs {y.shape}")
    if mask is None:
        return s, y
    mask = np.asarray(mask, dtype=bool)
    if mask.all():
        return s, y
    idx = np.flatnonzero(mask)
    return ad.take(s, idx), y[idx]


def _ideal_dcg(y, k):
    ideal = max_dcg_at_k(y, k)
    if ideal == 0.0:
        raise EmptyQueryError("query has no document with a positive label")
    return ideal


def _perms(s, tau, noise):
    if noise is None:
        return [neural_sort(s, tau)]
    return stochastic_neural_sort(s, tau, noise)


def neural_ndcg(s, y, tau=1.0, k=None, mask=None, *, sinkhorn=True, noise=None, max_iter=30, tol=1e-6):
    """Negated smooth NDCG@k over ranks.

    Gains are quasi-sorted by the (Sinkhorn-scaled) relaxed permutation
    matrix, then discounted rank by rank and truncated at ``k``. With
    ``noise`` the value is averaged over the Gumbel samples.
    """
    s, y = _select(s, y, mask)
    n = y.shape[0]
    ideal = _ideal_dcg(y, k)
    gains = gain(y).reshape(n)
    d = discount_vector(n, k)

    total = None
    perms = _perms(s, tau, noise)
    for p in perms:
        m = p.matrix
        if sinkhorn:
            m = sinkhorn_scale(m, max_iter, tol).matrix
        dcg = ad.sum(ad.matmul(m, gains) * d)
        total = dcg if total is None else total + dcg
    return ad.scalar_mul(total, -1.0 / (ideal * len(perms)))


def neural_ndcg_transposed(s, y, tau=1.0, k=None, mask=None, *, noise=None, max_iter=30, tol=1e-6):
    """Negated smooth NDCG@k summed over documents.

    Each document gets a weighted average of per-rank discounts from the
    Sinkhorn-scaled transpose of the relaxed permutation matrix. Discounts
    past rank ``k`` are zero, so truncation happens through the weights.
    """
    s, y = _select(s, y, mask)
    n = y.shape[0]
    ideal = _ideal_dcg(y, k)
    gains = gain(y).reshape(n)
    d = discount_vector(n, k)

    total = None
    perms = _perms(s, tau, noise)
    for p in perms:
        m = sinkhorn_scale(ad.transpose(p.matrix), max_iter, tol).matrix
        dcg = ad.sum(ad.matmul(m, d) * gains)
        total = dcg if total is None else total + dcg
    return ad.scalar_mul(total, -1.0 / (ideal * len(perms)))


def approx_positions(s, alpha=1.0):
    """Smooth one-based positions: ``1 + sum_{j != i} sigmoid(-alpha (s_i - s_j))``."""
    n = ad.value_of(s).shape[0]
    diff = ad.reshape(s, (n, 1)) - ad.reshape(s, (1, n))
    # the j == i term contributes sigmoid(0) = 0.5
    return ad.sum_axis(ad.sigmoid(ad.scalar_mul(diff, -alpha)), 1) + 0.5


def approx_ndcg(s, y, alpha=1.0, mask=None):
    """Negated NDCG with ranks replaced by sigmoid-smoothed positions.

    Follows the original ApproxNDCG construction over the full list (no
    cutoff): ``-(1/maxDCG) * sum_i g(y_i) / log2(1 + pos_i)``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    s, y = _select(s, y, mask)
    ideal = _ideal_dcg(y, None)
    pos = approx_positions(s, alpha)
    dcg = ad.sum(ad.div(gain(y).reshape(-1), ad.log2(pos + 1.0)))
    return ad.scalar_mul(dcg, -1.0 / ideal)


def _log_softmax(s):
    top = float(np.max(ad.value_of(s)))
    lse = ad.log(ad.sum(ad.exp(s - top))) + top
    return s - lse


def listnet(s, y, mask=None):
    """Cross-entropy between softmax(labels) and softmax(scores)."""
    s, y = _select(s, y, mask)
    yf = y.astype(np.float64)
    target = np.exp(yf - yf.max())
    target /= target.sum()
    return ad.scalar_mul(ad.sum(_log_softmax(s) * target), -1.0)


def listmle(s, y, mask=None):
    """Negative Plackett-Luce log-likelihood of the label ordering.

    Documents are ordered by label descending, ties by original index.
    """
    s, y = _select(s, y, mask)
    n = y.shape[0]
    order = np.argsort(-y, kind="stable")
    ss = ad.take(s, order)
    vals = ad.value_of(ss)
    suffix_max = np.maximum.accumulate(vals[::-1])[::-1].reshape(n, 1)
    upper = np.triu(np.ones((n, n)))
    # entries below the diagonal are discarded by `upper`; clamping keeps them finite
    shifted = ad.clamp(ad.reshape(ss, (1, n)) - suffix_max, hi=0.0)
    lse = ad.log(ad.sum_axis(ad.exp(shifted) * upper, 1)) + suffix_max.reshape(n)
    return ad.sum(lse - ss)


def ranknet(s, y, mask=None):
    """Mean logistic loss over ordered pairs with ``y_i > y_j``."""
    s, y = _select(s, y, mask)
    hi, lo = np.nonzero(y[:, None] > y[None, :])
    if hi.size == 0:
        raise EmptyQueryError("no document pair with different labels")
    margin = ad.take(s, hi) - ad.take(s, lo)
    return ad.mean(ad.softplus(ad.scalar_mul(margin, -1.0)))


def rmse(s, y, levels=4, mask=None):
    """RMSE between ``levels * sigmoid(s)`` and the labels."""
    s, y = _select(s, y, mask)
    if np.any(y > levels):
        raise ValueError(f"labels exceed the number of relevance levels ({levels})")
    resid = ad.scalar_mul(ad.sigmoid(s), float(levels)) - y.astype(np.float64)
    return ad.sqrt(ad.mean(resid * resid))


def delta_ndcg_matrix(s, y, k=None, mask=None) -> np.ndarray:
    """|NDCG@k change| from swapping each pair in the score-induced ranking."""
    s_val = ad.value_of(s)
    s_val, y = _select(s_val, y, mask)
    n = y.shape[0]
    ideal = _ideal_dcg(y, k)
    positions = np.empty(n, dtype=np.int64)
    positions[ranking_order(s_val)] = np.arange(n)
    return kernels.swap_delta_ndcg(gain(y).reshape(n), positions, discount_vector(n, k), 1.0 / ideal)


def lambdarank_gradients(s, y, k=None, mask=None) -> np.ndarray:
    """LambdaRank gradient with respect to the scores (descent convention).

    ``grad_i = -sum_{j: y_i != y_j} sign(y_i - y_j) |dNDCG@k(i, j)|
    sigmoid(-sign(y_i - y_j)(s_i - s_j))``, so a gradient step raises
    documents that should move up. Padded entries get zero.
    """
    s_full = np.asarray(ad.value_of(s), dtype=np.float64)
    y_full = np.asarray(y)
    s_val, y_val = _select(s_full, y_full, mask)
    delta = delta_ndcg_matrix(s_val, y_val, k)
    lam = kernels.lambda_gradients(s_val, y_val.astype(np.float64), delta)
    if mask is None:
        return lam
    out = np.zeros_like(s_full)
    out[np.asarray(mask, dtype=bool)] = lam
    return out


def compute_loss(config: LossConfig, s, y, mask=None):
    """Scalar loss for ``config.kind``. LambdaRank has none; use its gradients."""
    kind = config.kind
    if kind == "neural_ndcg":
        return neural_ndcg(s, y, config.temperature, config.k, mask, sinkhorn=config.sinkhorn, noise=config.stochastic)
    if kind == "neural_ndcg_t":
        return neural_ndcg_transposed(s, y, config.temperature, config.k, mask, noise=config.stochastic)
    if kind == "approx_ndcg":
        return approx_ndcg(s, y, config.alpha, mask)
    if kind == "listnet":
        return listnet(s, y, mask)
    if kind == "listmle":
        return listmle(s, y, mask)
    if kind == "ranknet":
        return ranknet(s, y, mask)
    if kind == "rmse":
        return rmse(s, y, config.levels, mask)
    raise ValueError("lambdarank defines gradients only; call lambdarank_gradients")
