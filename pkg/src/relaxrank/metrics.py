"""Exact DCG / NDCG at a rank cutoff.

A cutoff ``k`` is a positive int or ``None`` meaning the whole list. The
effective cutoff is clamped to the number of real (unmasked) documents.
Queries whose real labels are all zero score 1 by convention.
"""

from __future__ import annotations

import numpy as np


def parse_cutoff(k) -> int | None:
    """Accept ``5``, ``"5"``, ``"max"`` or ``None``."""
    if k is None:
        return None
    if isinstance(k, str):
        if k.strip().lower() == "max":
            return None
        k = int(k)
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ValueError(f"rank cutoff must be a positive integer or 'max', got {k!r}")
    return int(k)


def cutoff_label(k) -> str:
    return "max" if k is None else str(k)


def effective_cutoff(k, n_real: int) -> int:
    k = parse_cutoff(k)
    return n_real if k is None else min(k, n_real)


def gain(r):
    """2**r - 1, for a scalar or array of non-negative labels."""
    r_arr = np.asarray(r)
    if np.any(r_arr < 0):
        raise ValueError("relevance labels must be non-negative")
    out = np.exp2(r_arr.astype(np.float64)) - 1.0
    return float(out) if out.ndim == 0 else out


def discount(j):
    """1 / log2(j + 1) for one-based rank ``j``."""
    j_arr = np.asarray(j)
    if np.any(j_arr < 1):
        raise ValueError("ranks are one-based; got a rank below 1")
    out = 1.0 / np.log2(j_arr.astype(np.float64) + 1.0)
    return float(out) if out.ndim == 0 else out


def discount_vector(n: int, k=None) -> np.ndarray:
    """Per-rank discounts for ranks 1..n, zeroed past the cutoff."""
    d = 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64)) if n else np.zeros(0)
    kk = effective_cutoff(k, n)
    d[kk:] = 0.0
    return d


def _check_mask(n, mask):
    if mask is None:
        return np.ones(n, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n,):
        raise ValueError(f"mask has shape {mask.shape}, expected ({n},)")
    return mask


def ranking_order(s, mask=None) -> np.ndarray:
    """Indices of documents in ranked order.

    Descending score, ties broken by original index, masked entries last.
    """
    s = np.asarray(s, dtype=np.float64)
    mask = _check_mask(s.shape[0], mask)
    # lexsort keys: last is primary
    return np.lexsort((np.arange(s.shape[0]), -s, ~mask))


def sort_by_scores(s, y, mask=None) -> np.ndarray:
    s = np.asarray(s)
    y = np.asarray(y)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.shape} vs {y.shape}")
    return y[ranking_order(s, mask)]


def dcg_at_k(ranked, k=None) -> float:
    ranked = np.asarray(ranked)
    kk = effective_cutoff(k, ranked.shape[0])
    if kk == 0:
        return 0.0
    top = ranked[:kk]
    return float(np.sum(gain(top) * discount(np.arange(1, kk + 1))))


def max_dcg_at_k(y, k=None, mask=None) -> float:
    y = np.asarray(y)
    mask = _check_mask(y.shape[0], mask)
    ideal = np.sort(y[mask])[::-1]
    return dcg_at_k(ideal, k)


def ndcg_at_k(s, y, k=None, mask=None) -> float:
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.shape} vs {y.shape}")
    mask = _check_mask(s.shape[0], mask)
    ideal = max_dcg_at_k(y, k, mask)
    if ideal == 0.0:
        return 1.0
    n_real = int(mask.sum())
    ranked = sort_by_scores(s, y, mask)[:n_real]
    return dcg_at_k(ranked, k) / ideal
