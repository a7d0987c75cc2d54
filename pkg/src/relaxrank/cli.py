"""Command-line entry point: ``relaxrank <subcommand> ...``.

Errors exit with status 2 and print a single ``error: <kind>: <message>``
line on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from pathlib import Path

from .config import parse_config_text
from .data import apply_standardizer, parse_letor
from .demos import run_gradcheck, run_sort_demo, run_sweep
from .losses import DIFFERENTIABLE_KINDS
from .metrics import cutoff_label, parse_cutoff
from .model import load_checkpoint
from .trainer import evaluate, metric_name, train

DEFAULT_SEED = 0


class CliError(Exception):
    pass


class GradCheckFailed(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _fmt(v: float, digits: int) -> str:
    return f"{v:.{digits}g}"


def _parse_ks(text: str):
    return [parse_cutoff(t.strip()) for t in text.split(",") if t.strip()]


def _parse_grid(text: str):
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise CliError(f"--grid must look like lo:hi:count, got {text!r}") from None


def cmd_sort_demo(args, out):
    rows = run_sort_demo()
    width = max(len(r.label) for r in rows)
    for r in rows:
        cells = "  ".join(f"{_fmt(v, args.digits):>11}" for v in r.values)
        out.write(f"{r.label:<{width}}  {cells}  | sum {_fmt(r.total, args.digits)}\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row"] + [f"rank_{i + 1}" for i in range(len(rows[0].values))] + ["sum"])
            for r in rows:
                w.writerow([r.label] + [_fmt(v, args.digits) for v in r.values] + [_fmt(r.total, args.digits)])
    return 0


def cmd_sweep(args, out):
    taus = [float(t) for t in args.tau.split(",") if t.strip()]
    lo, hi, count = _parse_grid(args.grid)
    rows = run_sweep(args.figure, taus, lo, hi, count, args.out, args.digits)
    out.write(f"wrote {len(rows)} rows to {args.out}\n")
    return 0


def cmd_gradcheck(args, out):
    kinds = DIFFERENTIABLE_KINDS if args.loss == "all" else (args.loss,)
    errors = run_gradcheck(kinds, args.n, args.trials, args.seed, args.h)
    failed = False
    for kind, err in errors.items():
        ok = err < args.tol
        failed |= not ok
        out.write(f"{kind:<14} max_rel_err {_fmt(err, args.digits):>12}  {'ok' if ok else 'FAIL'}\n")
    if failed:
        raise GradCheckFailed(f"gradient check exceeded tolerance {args.tol:g}")
    return 0


def cmd_train(args, out):
    config = _load_config(Path(args.config), args.set)
    out.write("# resolved config\n" + config.to_text())
    out.write(f"# seed = {config.seed}\n")
    result = train(config)
    for r in result.history.epochs:
        out.write(
            f"epoch {r.epoch:>3}  loss {_fmt(r.loss, args.digits):>12}  val ndcg@5 {_fmt(r.ndcg_at_5, args.digits):>9}"
            f"  ndcg@10 {_fmt(r.ndcg_at_10, args.digits):>9}  lr {_fmt(r.lr, args.digits)}\n"
        )
    out.write(f"best epoch {result.best_epoch}\n")
    for name, v in result.test_metrics.items():
        out.write(f"test {name:<9} {_fmt(v, args.digits)}\n")
    return 0


def _load_config(path, overrides):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string(path.read_text())
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise CliError(f"--set expects section.key=value, got {item!r}")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value.strip())
    lines = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in parser.items(section)]
    return parse_config_text("\n".join(lines), base_dir=path.parent)


def cmd_evaluate(args, out):
    params = load_checkpoint(args.model)
    ks = _parse_ks(args.k)
    rows = []
    for data_path in args.data:
        groups = parse_letor(data_path, num_features=params.dims[0])
        if params.feature_stats is not None:
            groups = apply_standardizer(params.feature_stats, groups)
        metrics = evaluate(params, groups, ks)
        split_name = Path(data_path).name
        for k in ks:
            value = metrics[metric_name(k)]
            rows.append((split_name, "ndcg", cutoff_label(k), value))
            out.write(f"{split_name:<16} ndcg@{cutoff_label(k):<4} {_fmt(value, args.digits)}\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["split", "metric", "k", "value"])
            for split_name, metric, k, value in rows:
                w.writerow([split_name, metric, k, _fmt(value, args.digits)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relaxrank", description="Differentiable NDCG losses and a small LTR trainer.")
    p.add_argument("--digits", type=int, default=6, help="significant digits in numeric output")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    # the same flags after the subcommand; SUPPRESS keeps the top-level value unless given
    common = _Parser(add_help=False)
    common.add_argument("--digits", type=int, default=argparse.SUPPRESS, help="significant digits in numeric output")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", parents=[common], help="train a model from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", parents=[common], help="NDCG@k of a saved model on LETOR files")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True, action="append", help="LETOR file; repeat for several splits")
    e.add_argument("--k", default="5,10,max")
    e.add_argument("--csv")
    e.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("sort-demo", parents=[common], help="relaxed sorting of labels for a fixed six-document example")
    d.add_argument("--csv")
    d.set_defaults(func=cmd_sort_demo)

    s = sub.add_parser("sweep", parents=[common], help="write NDCG vs relaxed NDCG curves as CSV")
    s.add_argument("--figure", choices=("fig1", "fig2"), required=True)
    s.add_argument("--tau", default="1.0", help="comma-separated temperatures")
    s.add_argument("--grid", default="-1:5:500", help="lo:hi:count; write --grid=-1:5:500 when lo is negative")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gradcheck", parents=[common], help="compare tape gradients with central differences")
    g.add_argument("--loss", default="all", choices=("all",) + DIFFERENTIABLE_KINDS)
    g.add_argument("--n", type=int, default=10, help="maximum list length")
    g.add_argument("--trials", type=int, default=50)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--h", type=float, default=1e-5)
    g.add_argument("--tol", type=float, default=1e-4)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, format="%(message)s")
        if args.command != "train":
            resolved = " ".join(f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in ("func", "command"))
            out.write(f"# {args.command} {resolved} seed={getattr(args, 'seed', DEFAULT_SEED)}\n")
        return args.func(args, out)
    except CliError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
