"""Small fixed experiments behind the ``sort-demo``, ``sweep`` and ``gradcheck`` commands."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .losses import DIFFERENTIABLE_KINDS, LossConfig, compute_loss, neural_ndcg
from .metrics import ndcg_at_k, sort_by_scores
from .relaxed_sort import neural_sort

DEMO_SCORES = np.array([0.5, 0.2, 0.1, 0.01, 0.65, 0.3])
DEMO_LABELS = np.array([4, 2, 1, 0, 4, 3])
DEMO_TEMPERATURES = (0.01, 0.1, 1.0)

FIG1_LABELS = np.array([2, 1, 0, 0, 0])
FIG1_SCORES = np.array([4.0, 1.0, 0.0, 0.0, 0.0])
FIG2_LABELS = np.array([1, 2, 3, 4, 5])
FIG2_SCORES = np.array([1.0, 2.0, 3.0, 4.0, 0.0])
SWEEP_COLUMNS = ("x", "ndcg", "neural_ndcg_scaled", "neural_ndcg_unscaled", "tau")


@dataclass
class SortDemoRow:
    label: str
    values: np.ndarray
    total: float


def run_sort_demo(scores=DEMO_SCORES, labels=DEMO_LABELS, temperatures=DEMO_TEMPERATURES) -> list[SortDemoRow]:
    """Labels sorted exactly, then quasi-sorted by the raw relaxed matrix at each temperature."""
    exact = sort_by_scores(scores, labels).astype(np.float64)
    rows = [SortDemoRow("exact", exact, float(exact.sum()))]
    y = np.asarray(labels, dtype=np.float64)
    for tau in temperatures:
        q = neural_sort(np.asarray(scores, dtype=np.float64), tau).values @ y
        rows.append(SortDemoRow(f"tau={tau:g}", q, float(q.sum())))
    return rows


def sweep_rows(figure: str, taus, lo: float, hi: float, count: int) -> list[tuple]:
    """Rows of ``SWEEP_COLUMNS`` for the last score varied over ``[lo, hi]``.

    fig1 varies x in s = [4, 1, 0, 0, x] with y = [2, 1, 0, 0, 0]; fig2 varies
    x in s = [1, 2, 3, 4, x] with y = [1, 2, 3, 4, 5]. NeuralNDCG columns are
    the metric value (not the negated loss) at the full cutoff.
    """
    if figure not in ("fig1", "fig2"):
        raise ValueError(f"figure must be fig1 or fig2, got {figure!r}")
    if count < 2:
        raise ValueError("grid needs at least 2 points")
    taus = list(taus)
    if not taus or any(not t > 0 for t in taus):
        raise ValueError("temperatures must be positive")
    base, labels = (FIG1_SCORES, FIG1_LABELS) if figure == "fig1" else (FIG2_SCORES, FIG2_LABELS)
    rows = []
    for tau in taus:
        for x in np.linspace(lo, hi, count):
            s = base.copy()
            s[-1] = x
            rows.append(
                (
                    float(x),
                    ndcg_at_k(s, labels),
                    -float(neural_ndcg(s, labels, tau)),
                    -float(neural_ndcg(s, labels, tau, sinkhorn=False)),
                    float(tau),
                )
            )
    return rows


def run_sweep(figure: str, taus, lo: float, hi: float, count: int, out_path, digits: int = 6) -> list[tuple]:
    rows = sweep_rows(figure, taus, lo, hi, count)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([f"{v:.{digits}g}" for v in row])
    return rows


def random_instance(rng, n_max: int = 10):
    """Scores uniform in [-2, 2], labels 0-4 with at least two distinct values and one positive."""
    n = int(rng.integers(2, n_max + 1))
    s = rng.uniform(-2.0, 2.0, n)
    y = rng.integers(0, 5, n)
    if np.all(y == y[0]) or y.max() == 0:
        y[0], y[1] = 0, int(rng.integers(1, 5))
    return s, y


def run_gradcheck(kinds=DIFFERENTIABLE_KINDS, n_max: int = 10, trials: int = 50, seed: int = 0, h: float = 1e-5):
    """Worst relative gradient error per loss over seeded random instances."""
    out = {}
    for kind in kinds:
        if kind not in DIFFERENTIABLE_KINDS:
            raise ValueError(f"{kind!r} has no scalar loss to check")
        cfg = LossConfig(kind=kind)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            s, y = random_instance(rng, n_max)
            worst = max(worst, ad.grad_check(lambda v: compute_loss(cfg, v, y), s, h))
        out[kind] = worst
    return out
