"""MLP scoring function: one score per document, no cross-document interaction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import FeatureStats

CHECKPOINT_FORMAT = "relaxrank-mlp"
CHECKPOINT_VERSION = 1
OUTPUT_ACTIVATIONS = ("none", "tanh")


@dataclass
class MlpParams:
    dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "none"
    feature_stats: FeatureStats | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")
        if len(self.weights) != len(self.dims) - 1 or len(self.biases) != len(self.dims) - 1:
            raise ValueError("need one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.dims[i], self.dims[i + 1]) or b.shape != (self.dims[i + 1],):
                raise ValueError(f"layer {i}: shapes {w.shape}, {b.shape} do not match dims {self.dims}")

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list, interleaved W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_arrays(self, arrays) -> "MlpParams":
        arrays = [np.array(a, dtype=np.float64) for a in arrays]
        return MlpParams(list(self.dims), arrays[0::2], arrays[1::2], self.output_activation, self.feature_stats)

    def copy(self) -> "MlpParams":
        return self.with_arrays(self.arrays())


def init_params(dims, seed: int = 0, output_activation: str = "none") -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"dims must list at least input and output widths, got {dims}")
    if dims[-1] != 1:
        raise ValueError("the last layer must have width 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(dims, weights, biases, output_activation)


def forward(layers, features, output_activation: str = "none"):
    """Scores for ``features`` (n, d) given ``[(W, b), ...]``; entries may be Vars.

    Hidden layers use a rectifier. Returns a length-n vector.
    """
    h = features
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        h = ad.matmul(h, w) + b
        if i < last:
            h = ad.relu(h)
    n = ad.value_of(h).shape[0]
    h = ad.reshape(h, (n,))
    if output_activation == "tanh":
        h = ad.tanh(h)
    return h


def score(params: MlpParams, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.dims[0]:
        raise ValueError(f"features have shape {x.shape}; model expects width {params.dims[0]}")
    return forward(list(zip(params.weights, params.biases)), x, params.output_activation)


def bind(params: MlpParams, tape: ad.Tape) -> list[ad.Var]:
    """Register parameters as tape leaves, same order as ``params.arrays()``."""
    return [tape.variable(a) for a in params.arrays()]


def score_on_tape(params: MlpParams, param_vars, features):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.dims[0]:
        raise ValueError(f"features have shape {x.shape}; model expects width {params.dims[0]}")
    layers = list(zip(param_vars[0::2], param_vars[1::2]))
    return forward(layers, x, params.output_activation)


def save_checkpoint(params: MlpParams, path) -> None:
    """JSON checkpoint. Floats are written with repr, so they round-trip exactly."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": params.dims,
        "output_activation": params.output_activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "feature_stats": params.feature_stats.to_dict() if params.feature_stats is not None else None,
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> MlpParams:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    stats = doc.get("feature_stats")
    return MlpParams(
        dims=[int(d) for d in doc["dims"]],
        weights=[np.asarray(w, dtype=np.float64).reshape(a, b) for w, a, b in zip(doc["weights"], doc["dims"][:-1], doc["dims"][1:])],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        output_activation=doc["output_activation"],
        feature_stats=FeatureStats.from_dict(stats) if stats is not None else None,
    )
