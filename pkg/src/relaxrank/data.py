"""LETOR / SVMLight-with-qid ranking data.

Line format::

    <label> qid:<id> <fid>:<value> ... [# comment]

Feature ids are 1-based and may be sparse; missing ids read as 0. Files may
be gzip-compressed (detected from the magic bytes, not the extension).
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

GZIP_MAGIC = b"\x1f\x8b"


class LetorFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}")


@dataclass
class QueryGroup:
    qid: str
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    mask: np.ndarray = field(default=None)  # (n,) bool, True = real document

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.mask is None:
            self.mask = np.ones(self.labels.shape[0], dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
        n = self.labels.shape[0]
        if self.features.ndim != 2 or self.features.shape[0] != n or self.mask.shape != (n,):
            raise ValueError(f"query {self.qid}: inconsistent shapes {self.features.shape}, {self.labels.shape}")
        if np.any(self.labels < 0):
            raise ValueError(f"query {self.qid}: negative label")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def is_empty(self) -> bool:
        """No real document has a positive label."""
        return not np.any(self.labels[self.mask] > 0)


def _open_text(path):
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == GZIP_MAGIC:
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def _parse_line(line: str, lineno: int):
    body = line.split("#", 1)[0].split()
    if not body:
        return None
    if len(body) < 2 or not body[1].startswith("qid:"):
        raise LetorFormatError(lineno, "expected '<label> qid:<id> ...'")
    try:
        label = int(body[0])
    except ValueError:
        raise LetorFormatError(lineno, f"label {body[0]!r} is not an integer") from None
    if label < 0:
        raise LetorFormatError(lineno, f"negative label {label}")
    qid = body[1][4:]
    if not qid:
        raise LetorFormatError(lineno, "empty qid")
    feats = {}
    for tok in body[2:]:
        fid, sep, val = tok.partition(":")
        try:
            fid_i = int(fid)
            val_f = float(val)
        except ValueError:
            raise LetorFormatError(lineno, f"bad feature token {tok!r}") from None
        if not sep or fid_i < 1:
            raise LetorFormatError(lineno, f"bad feature token {tok!r}")
        feats[fid_i] = val_f
    return label, qid, feats


def parse_letor(path, num_features: int | None = None) -> list[QueryGroup]:
    """Read a LETOR file into query groups in order of first appearance.

    The feature width is the largest feature id in the file unless
    ``num_features`` is given.
    """
    rows: dict[str, list] = {}
    max_fid = 0
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parsed = _parse_line(line, lineno)
            if parsed is None:
                continue
            label, qid, feats = parsed
            if feats:
                max_fid = max(max_fid, max(feats))
            rows.setdefault(qid, []).append((label, feats))

    d = max_fid if num_features is None else num_features
    if d < max_fid:
        raise ValueError(f"file uses feature id {max_fid} but num_features={num_features}")
    groups = []
    for qid, docs in rows.items():
        x = np.zeros((len(docs), d))
        for i, (_, feats) in enumerate(docs):
            for fid, val in feats.items():
                x[i, fid - 1] = val
        groups.append(QueryGroup(qid, x, np.array([lab for lab, _ in docs])))
    return groups


def write_letor(groups, path) -> None:
    """Write real (unmasked) documents; zero features are omitted."""
    with open(path, "w", encoding="utf-8") as fh:
        for g in groups:
            for x, label in zip(g.features[g.mask], g.labels[g.mask]):
                feats = " ".join(f"{j + 1}:{v!r}" for j, v in enumerate(x.tolist()) if v != 0.0)
                fh.write(f"{label} qid:{g.qid} {feats}".rstrip() + "\n")


@dataclass
class FeatureStats:
    mean: np.ndarray
    std: np.ndarray
    log_transform: np.ndarray  # bool per feature

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "log_transform": [int(v) for v in self.log_transform],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureStats":
        return cls(
            np.asarray(data["mean"], dtype=np.float64),
            np.asarray(data["std"], dtype=np.float64),
            np.asarray(data["log_transform"], dtype=bool),
        )


def _signed_log1p(x):
    return np.sign(x) * np.log1p(np.abs(x))


def fit_standardizer(groups, log_threshold: float = 1e3) -> FeatureStats:
    """Statistics from the (training) groups given; pass the training split only.

    Features whose absolute maximum exceeds ``log_threshold`` are flagged for
    ``sign(x) * log(1 + |x|)`` before standardisation.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("cannot fit a standardizer on no data")
    x = np.concatenate([g.features[g.mask] for g in groups], axis=0)
    if x.shape[0] == 0:
        raise ValueError("cannot fit a standardizer on no documents")
    flags = np.abs(x).max(axis=0) > log_threshold
    x = np.where(flags, _signed_log1p(x), x)
    with np.errstate(over="ignore"):
        std = x.std(axis=0)
    if not (np.all(np.isfinite(std)) and np.all(np.isfinite(x))):
        raise ValueError("feature statistics overflow; lower log_threshold or clean the data")
    std = np.where(std < 1e-12, 1.0, std)
    return FeatureStats(x.mean(axis=0), std, flags)


def apply_standardizer(stats: FeatureStats, groups) -> list[QueryGroup]:
    out = []
    for g in groups:
        x = np.where(stats.log_transform, _signed_log1p(g.features), g.features)
        x = (x - stats.mean) / stats.std
        # padded rows stay zero
        x[~g.mask] = 0.0
        out.append(replace(g, features=x))
    return out


def pad_or_sample(group: QueryGroup, n: int, rng) -> QueryGroup:
    """Subsample without replacement down to ``n`` documents, or pad with masked zero rows.

    ``rng`` is a numpy Generator or an int seed.
    """
    if n < 1:
        raise ValueError("target list length must be at least 1")
    rng = np.random.default_rng(rng)
    m = len(group)
    if m == n:
        return group
    if m > n:
        keep = np.sort(rng.choice(m, size=n, replace=False))
        return QueryGroup(group.qid, group.features[keep], group.labels[keep], group.mask[keep])
    pad = n - m
    d = group.features.shape[1]
    return QueryGroup(
        group.qid,
        np.vstack([group.features, np.zeros((pad, d))]),
        np.concatenate([group.labels, np.zeros(pad, dtype=np.int64)]),
        np.concatenate([group.mask, np.zeros(pad, dtype=bool)]),
    )


def split(groups, fractions=(0.6, 0.2, 0.2), seed: int = 0):
    """Query-level train/validation/test split after a seeded shuffle."""
    groups = list(groups)
    if len(groups) < 3:
        raise ValueError(f"need at least 3 query groups to split, got {len(groups)}")
    if len(fractions) != 3 or any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise ValueError(f"fractions must be three non-negative numbers summing to 1, got {fractions}")
    n = len(groups)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_valid = int(round(fractions[1] * n))
    n_train = min(n_train, n)
    n_valid = min(n_valid, n - n_train)
    parts = np.split(order, [n_train, n_train + n_valid])
    return tuple([groups[i] for i in part] for part in parts)


def make_synthetic(
    n_queries: int = 200,
    docs_per_query: int = 20,
    n_features: int = 10,
    noise: float = 0.5,
    seed: int = 0,
):
    """Queries with labels 0-4 from a noisy linear utility.

    Returns ``(groups, weights)``; ``features @ weights`` is the noise-free
    utility. Labels are the utility quantised at fixed global thresholds.
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(size=n_features)
    w /= np.linalg.norm(w)
    groups = []
    thresholds = np.array([0.0, 0.7, 1.3, 1.9])
    for q in range(n_queries):
        x = rng.normal(size=(docs_per_query, n_features))
        util = x @ w + noise * rng.normal(size=docs_per_query)
        labels = np.searchsorted(thresholds, util, side="right")
        groups.append(QueryGroup(str(q + 1), x, labels))
    return groups, w
