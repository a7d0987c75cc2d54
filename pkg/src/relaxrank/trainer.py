"""Mini-batch training with Adam, a step learning-rate schedule and per-epoch validation."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .config import TrainConfig
from .data import (
    QueryGroup,
    apply_standardizer,
    fit_standardizer,
    make_synthetic,
    pad_or_sample,
    parse_letor,
    split,
)
from .losses import EmptyQueryError, LossConfig, compute_loss, lambdarank_gradients
from .metrics import cutoff_label, ndcg_at_k
from .model import MlpParams, bind, init_params, save_checkpoint, score, score_on_tape

log = logging.getLogger(__name__)

DEFAULT_KS = (5, 10, None)


class TrainingError(RuntimeError):
    pass


# -- optimiser ---------------------------------------------------------------


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ValueError("params, grads and optimiser state differ in length")
    t = state.step + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise ValueError(f"adam_step: shape mismatch {p.shape}, {g.shape}, {m.shape}, {v.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)


# -- history -------------------------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    ndcg_at_5: float
    ndcg_at_10: float
    ndcg_at_max: float
    lr: float
    seconds: float


HISTORY_COLUMNS = ("epoch", "loss", "ndcg_at_5", "ndcg_at_10", "ndcg_at_max", "lr", "seconds")


@dataclass
class TrainHistory:
    initial: dict[str, float] = field(default_factory=dict)
    epochs: list[EpochRecord] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTORY_COLUMNS)
            for r in self.epochs:
                w.writerow([r.epoch] + [f"{getattr(r, c):.6g}" for c in HISTORY_COLUMNS[1:]])

    def metrics_only(self) -> list[tuple]:
        """Records without wall time, for determinism comparisons."""
        return [(r.epoch, r.loss, r.ndcg_at_5, r.ndcg_at_10, r.ndcg_at_max, r.lr) for r in self.epochs]


@dataclass
class TrainResult:
    params: MlpParams
    history: TrainHistory
    test_metrics: dict[str, float]
    best_epoch: int


# -- evaluation ----------------------------------------------------------------


def metric_name(k) -> str:
    return f"ndcg@{cutoff_label(k)}"


def evaluate(params: MlpParams, groups, ks=DEFAULT_KS) -> dict[str, float]:
    """Mean per-query NDCG@k over full-length lists; empty queries count as 1."""
    groups = list(groups)
    out = {}
    if not groups:
        return {metric_name(k): 1.0 for k in ks}
    per_query = []
    for g in groups:
        s = score(params, g.features)
        per_query.append([ndcg_at_k(s, g.labels, k, g.mask) for k in ks])
    means = np.mean(np.array(per_query), axis=0)
    for k, v in zip(ks, means):
        out[metric_name(k)] = float(v)
    return out


# -- training --------------------------------------------------------------------


def batch_loss_and_grads(params: MlpParams, batch: list[QueryGroup], loss: LossConfig):
    """Mean loss over the non-empty queries of ``batch`` and its parameter gradients.

    Returns ``(loss, grads, n_used)``; ``grads`` is None when every query was
    skipped.
    """
    tape = ad.Tape()
    pvars = bind(params, tape)
    x = np.vstack([g.features for g in batch])
    scores = score_on_tape(params, pvars, x)

    offsets = np.cumsum([0] + [len(g) for g in batch])
    if loss.kind == "lambdarank":
        seed = np.zeros(scores.shape)
        proxies = []
        for g, lo, hi in zip(batch, offsets[:-1], offsets[1:]):
            s = scores.value[lo:hi]
            try:
                seed[lo:hi] = lambdarank_gradients(s, g.labels, loss.k, g.mask)
            except EmptyQueryError:
                continue
            # no scalar LambdaRank loss exists; report -NDCG@k as the running loss
            proxies.append(-ndcg_at_k(s, g.labels, loss.k, g.mask))
        if not proxies:
            return float("nan"), None, 0
        seed /= len(proxies)
        grads = tape.backward(scores, grad_output=seed)
        return float(np.mean(proxies)), [grads[v] for v in pvars], len(proxies)

    terms = []
    for g, lo, hi in zip(batch, offsets[:-1], offsets[1:]):
        s = ad.take(scores, np.arange(lo, hi))
        try:
            terms.append(compute_loss(loss, s, g.labels, g.mask))
        except EmptyQueryError:
            continue
    if not terms:
        return float("nan"), None, 0
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    total = ad.scalar_mul(total, 1.0 / len(terms))
    grads = tape.backward(total)
    return float(total.value), [grads[v] for v in pvars], len(terms)


def _clip(grads, max_norm):
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if norm <= max_norm or norm == 0.0:
        return grads
    return [g * (max_norm / norm) for g in grads]


def load_data(config: TrainConfig):
    """Train/validation/test groups as described by the config."""
    if config.synthetic_queries > 0:
        groups, _ = make_synthetic(
            config.synthetic_queries,
            config.synthetic_docs,
            config.synthetic_features,
            config.synthetic_noise,
            seed=config.split_seed,
        )
        return split(groups, seed=config.split_seed)
    if not config.train_path:
        raise TrainingError("no training data: set data.train or data.synthetic_queries")
    train = parse_letor(config.train_path)
    if config.valid_path and config.test_path:
        return train, parse_letor(config.valid_path), parse_letor(config.test_path)
    return split(train, seed=config.split_seed)


def train(config: TrainConfig, data=None) -> TrainResult:
    """Train an MLP scorer.

    ``data`` may be a ``(train, valid, test)`` tuple of raw query groups;
    otherwise it is loaded per the config. Features are standardised with
    training-split statistics. The parameters returned are those with the
    best validation NDCG@5 (the initial model included).
    """
    train_raw, valid_raw, test_raw = data if data is not None else load_data(config)
    if not any(not g.is_empty for g in train_raw):
        raise TrainingError("every training query is empty (no positive labels)")
    stats = fit_standardizer(train_raw, config.log_threshold)
    train_g = apply_standardizer(stats, train_raw)
    valid_g = apply_standardizer(stats, valid_raw)
    test_g = apply_standardizer(stats, test_raw)

    dims = [train_g[0].features.shape[1], *config.hidden, 1]
    params = init_params(dims, config.seed, config.resolved_activation)
    params.feature_stats = stats
    rng = np.random.default_rng(config.seed)

    history = TrainHistory(initial=evaluate(params, valid_g))
    best_score, best_params, best_epoch = history.initial["ndcg@5"], params.copy(), 0
    arrays = params.arrays()
    state = AdamState.zeros_like(arrays)

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        lr = config.lr_at(epoch)
        order = rng.permutation(len(train_g))
        batch_losses = []
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            batch = [pad_or_sample(train_g[i], config.list_length, rng) for i in order[start : start + config.batch_size]]
            batch = [g for g in batch if not g.is_empty]
            if not batch:
                continue
            loss_cfg = config.loss
            if loss_cfg.stochastic is not None:
                # fresh Gumbel draws per step, still fixed by the training seed
                noise = replace(loss_cfg.stochastic, seed=int(rng.integers(2**31)))
                loss_cfg = replace(loss_cfg, stochastic=noise)
            try:
                loss_value, grads, _ = batch_loss_and_grads(params, batch, loss_cfg)
            except ad.NonFiniteError as exc:
                raise TrainingError(f"epoch {epoch}, batch {b}: non-finite value in {exc.op}") from exc
            if grads is None:
                continue
            if not math.isfinite(loss_value):
                raise TrainingError(f"epoch {epoch}, batch {b}: non-finite loss")
            if config.grad_clip > 0:
                grads = _clip(grads, config.grad_clip)
            arrays, state = adam_step(arrays, grads, state, lr)
            params = params.with_arrays(arrays)
            batch_losses.append(loss_value)

        metrics = evaluate(params, valid_g)
        record = EpochRecord(
            epoch=epoch,
            loss=float(np.mean(batch_losses)) if batch_losses else float("nan"),
            ndcg_at_5=metrics["ndcg@5"],
            ndcg_at_10=metrics["ndcg@10"],
            ndcg_at_max=metrics["ndcg@max"],
            lr=lr,
            seconds=time.perf_counter() - t0,
        )
        history.epochs.append(record)
        log.info(
            "epoch %d loss %.6g val ndcg@5 %.6g ndcg@10 %.6g lr %.3g",
            epoch, record.loss, record.ndcg_at_5, record.ndcg_at_10, lr,
        )
        if record.ndcg_at_5 > best_score:
            best_score, best_params, best_epoch = record.ndcg_at_5, params.copy(), epoch

    test_metrics = evaluate(best_params, test_g)
    if config.out_dir:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(best_params, out / "model.json")
        history.to_csv(out / "history.csv")
    return TrainResult(best_params, history, test_metrics, best_epoch)
