"""Training configuration and its INI-style file format.

Sections map onto dotted key prefixes: ``[loss] kind = listnet`` sets
``loss.kind``. Unknown sections or keys are rejected. ``CONFIG_KEYS`` lists
every key with its default and meaning; the README table mirrors it.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .losses import LOSS_KINDS, LossConfig
from .metrics import cutoff_label, parse_cutoff
from .relaxed_sort import GumbelNoise

NEURAL_KINDS = ("neural_ndcg", "neural_ndcg_t")

# dotted key -> (default as written in a file, description)
CONFIG_KEYS = {
    "train.lr": ("0.001", "Adam learning rate"),
    "train.decay_factor": ("0.1", "learning-rate multiplier applied every decay_epoch epochs"),
    "train.decay_epoch": ("50", "epochs between learning-rate decays"),
    "train.epochs": ("100", "number of training epochs"),
    "train.batch_size": ("16", "queries per optimiser step"),
    "train.list_length": ("240", "documents per query after padding/subsampling"),
    "train.seed": ("42", "seed for initialisation, shuffling and subsampling"),
    "train.grad_clip": ("0", "global gradient-norm clip; 0 disables"),
    "loss.kind": ("neural_ndcg", "one of " + ", ".join(LOSS_KINDS)),
    "loss.k": ("max", "rank cutoff: positive integer or max"),
    "loss.temperature": ("1.0", "relaxed-sort temperature for neural_ndcg*"),
    "loss.alpha": ("1.0", "sigmoid sharpness for approx_ndcg"),
    "loss.stochastic_samples": ("0", "Gumbel samples per query; 0 = deterministic sort"),
    "loss.stochastic_scale": ("1.0", "Gumbel noise scale"),
    "loss.levels": ("4", "relevance levels for rmse"),
    "model.hidden": ("64", "comma-separated hidden layer widths; empty for a linear model"),
    "model.output_activation": ("auto", "none, tanh, or auto (tanh for neural_ndcg*)"),
    "data.train": ("", "LETOR file for training"),
    "data.valid": ("", "LETOR file for validation; empty = split from data.train"),
    "data.test": ("", "LETOR file for testing; empty = split from data.train"),
    "data.split_seed": ("0", "seed for the 60/20/20 query split"),
    "data.log_threshold": ("1000", "log-transform features whose training max |x| exceeds this"),
    "data.synthetic_queries": ("0", "if > 0, ignore files and generate this many synthetic queries"),
    "data.synthetic_docs": ("20", "documents per synthetic query"),
    "data.synthetic_features": ("10", "features per synthetic document"),
    "data.synthetic_noise": ("0.5", "label noise of the synthetic utility"),
    "output.dir": ("", "directory for model.json and history.csv; empty = do not write"),
}


@dataclass
class TrainConfig:
    loss: LossConfig = field(default_factory=LossConfig)
    lr: float = 0.001
    decay_factor: float = 0.1
    decay_epoch: int = 50
    epochs: int = 100
    batch_size: int = 16
    list_length: int = 240
    seed: int = 42
    grad_clip: float = 0.0
    hidden: tuple[int, ...] = (64,)
    output_activation: str = "auto"
    train_path: str = ""
    valid_path: str = ""
    test_path: str = ""
    split_seed: int = 0
    log_threshold: float = 1e3
    synthetic_queries: int = 0
    synthetic_docs: int = 20
    synthetic_features: int = 10
    synthetic_noise: float = 0.5
    out_dir: str = ""

    def __post_init__(self):
        for name in ("lr", "decay_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("decay_epoch", "epochs", "batch_size", "list_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.decay_epoch > self.epochs:
            raise ValueError("decay_epoch must not exceed epochs")
        if self.grad_clip < 0:
            raise ValueError("grad_clip must be non-negative")
        if self.output_activation not in ("auto", "none", "tanh"):
            raise ValueError("output_activation must be auto, none or tanh")
        self.hidden = tuple(int(h) for h in self.hidden)
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be positive")

    @property
    def resolved_activation(self) -> str:
        if self.output_activation != "auto":
            return self.output_activation
        return "tanh" if self.loss.kind in NEURAL_KINDS else "none"

    def lr_at(self, epoch: int) -> float:
        """Step schedule; epochs are one-based."""
        return self.lr * self.decay_factor ** ((epoch - 1) // self.decay_epoch)

    def to_flat(self) -> dict[str, str]:
        loss = self.loss
        noise = loss.stochastic
        return {
            "train.lr": repr(self.lr),
            "train.decay_factor": repr(self.decay_factor),
            "train.decay_epoch": str(self.decay_epoch),
            "train.epochs": str(self.epochs),
            "train.batch_size": str(self.batch_size),
            "train.list_length": str(self.list_length),
            "train.seed": str(self.seed),
            "train.grad_clip": repr(self.grad_clip),
            "loss.kind": loss.kind,
            "loss.k": cutoff_label(loss.k),
            "loss.temperature": repr(loss.temperature),
            "loss.alpha": repr(loss.alpha),
            "loss.stochastic_samples": str(noise.samples if noise else 0),
            "loss.stochastic_scale": repr(noise.scale if noise else 1.0),
            "loss.levels": str(loss.levels),
            "model.hidden": ",".join(str(h) for h in self.hidden),
            "model.output_activation": self.output_activation,
            "data.train": self.train_path,
            "data.valid": self.valid_path,
            "data.test": self.test_path,
            "data.split_seed": str(self.split_seed),
            "data.log_threshold": repr(self.log_threshold),
            "data.synthetic_queries": str(self.synthetic_queries),
            "data.synthetic_docs": str(self.synthetic_docs),
            "data.synthetic_features": str(self.synthetic_features),
            "data.synthetic_noise": repr(self.synthetic_noise),
            "output.dir": self.out_dir,
        }

    def to_text(self) -> str:
        lines = []
        section = None
        for key, value in self.to_flat().items():
            sec, name = key.split(".", 1)
            if sec != section:
                if section is not None:
                    lines.append("")
                lines.append(f"[{sec}]")
                section = sec
            lines.append(f"{name} = {value}")
        return "\n".join(lines) + "\n"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def from_flat(flat: dict[str, str]) -> TrainConfig:
    unknown = sorted(set(flat) - set(CONFIG_KEYS))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    v = {key: default for key, (default, _) in CONFIG_KEYS.items()}
    v.update(flat)

    samples = int(v["loss.stochastic_samples"])
    noise = None
    if samples > 0:
        noise = GumbelNoise(scale=float(v["loss.stochastic_scale"]), seed=int(v["train.seed"]), samples=samples)
    loss = LossConfig(
        kind=v["loss.kind"],
        k=parse_cutoff(v["loss.k"]),
        temperature=float(v["loss.temperature"]),
        alpha=float(v["loss.alpha"]),
        stochastic=noise,
        levels=int(v["loss.levels"]),
    )
    return TrainConfig(
        loss=loss,
        lr=float(v["train.lr"]),
        decay_factor=float(v["train.decay_factor"]),
        decay_epoch=int(v["train.decay_epoch"]),
        epochs=int(v["train.epochs"]),
        batch_size=int(v["train.batch_size"]),
        list_length=int(v["train.list_length"]),
        seed=int(v["train.seed"]),
        grad_clip=float(v["train.grad_clip"]),
        hidden=_int_list(v["model.hidden"]),
        output_activation=v["model.output_activation"],
        train_path=v["data.train"],
        valid_path=v["data.valid"],
        test_path=v["data.test"],
        split_seed=int(v["data.split_seed"]),
        log_threshold=float(v["data.log_threshold"]),
        synthetic_queries=int(v["data.synthetic_queries"]),
        synthetic_docs=int(v["data.synthetic_docs"]),
        synthetic_features=int(v["data.synthetic_features"]),
        synthetic_noise=float(v["data.synthetic_noise"]),
        out_dir=v["output.dir"],
    )


def parse_config_text(text: str, base_dir=None) -> TrainConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case
    parser.read_string(text)
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value.strip()
    cfg = from_flat(flat)
    if base_dir is not None:
        # relative data/output paths resolve against the config file's directory
        base = Path(base_dir)
        for name in ("train_path", "valid_path", "test_path", "out_dir"):
            p = getattr(cfg, name)
            if p and not Path(p).is_absolute():
                setattr(cfg, name, str(base / p))
    return cfg


def load_config(path) -> TrainConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), base_dir=path.parent)
