"""Differentiable NDCG surrogates built on a relaxed sorting operator."""

from .autodiff import Tape, Var, grad_check
from .losses import (
    LossConfig,
    approx_ndcg,
    lambdarank_gradients,
    listmle,
    listnet,
    neural_ndcg,
    neural_ndcg_transposed,
    ranknet,
    rmse,
)
from .metrics import dcg_at_k, ndcg_at_k
from .relaxed_sort import GumbelNoise, neural_sort, sinkhorn_scale, stochastic_neural_sort

__version__ = "0.1.0"

__all__ = [
    "Tape",
    "Var",
    "grad_check",
    "LossConfig",
    "approx_ndcg",
    "lambdarank_gradients",
    "listmle",
    "listnet",
    "neural_ndcg",
    "neural_ndcg_transposed",
    "ranknet",
    "rmse",
    "dcg_at_k",
    "ndcg_at_k",
    "GumbelNoise",
    "neural_sort",
    "sinkhorn_scale",
    "stochastic_neural_sort",
]
