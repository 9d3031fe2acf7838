"""Command line entry point: ``fedoffload {run,sweep,plot-data}``."""
from __future__ import annotations

import argparse
import ast
import logging
import sys

from .config import SWEEP_VARS, ExperimentConfig, load_config, make_config
from .errors import ConfigError, FedOffloadError
from .federation import FED_MODES
from .harness import emit_plot_data, run_experiment, sweep


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed (runs a single seed)")
    p.add_argument("--mode", choices=FED_MODES, action="append",
                   help="training mode; repeat for several")
    p.add_argument("--out", metavar="DIR", help="output directory")


def _parse_values(text: str):
    out = []
    for tok in text.split(";" if ";" in text else ","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(ast.literal_eval(tok))
        except (ValueError, SyntaxError):
            out.append(tok)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fedoffload", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train every configured mode/seed and write metrics.csv")
    _common(run)

    sw = sub.add_parser("sweep", help="repeat the experiment over values of one variable")
    _common(sw)
    sw.add_argument("--var", required=True, choices=SWEEP_VARS)
    sw.add_argument("--values", required=True,
                    help="comma-separated values; for architecture use ';' between "
                         "hidden-width lists (e.g. '30-64-16-32-32;1;2') or block counts")

    pd = sub.add_parser("plot-data", help="turn a metrics.csv into per-comparison tidy files")
    pd.add_argument("metrics", metavar="METRICS_CSV")
    pd.add_argument("--out", metavar="DIR")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else make_config({})
    changes = {}
    if args.seed is not None:
        changes.update(seed=args.seed, n_seeds=1)
    if args.mode:
        changes["modes"] = tuple(args.mode)
    if args.out:
        changes["out_dir"] = args.out
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot-data":
            for fig, path in emit_plot_data(args.metrics, args.out).items():
                print(f"{fig}: {path}")
            return 0
        cfg = _config_from_args(args)
        if args.command == "run":
            path = run_experiment(cfg)
        else:
            path = sweep(cfg, args.var, _parse_values(args.values))
        print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FedOffloadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
