"""Command line entry point.

Exit codes: 0 success, 1 configuration or task error, 2 golden mismatch,
3 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, ConfigInvalid, GoldenMismatch, KakutaniError
from .reports import CASES, ExperimentConfig, parse_t, reproduce_paper, run_experiment, system_from_alpha
from .symbolic import parse_word

EXIT_OK, EXIT_CONFIG, EXIT_GOLDEN, EXIT_BUDGET = 0, 1, 2, 3


def _interval(text):
    lo, _, hi = text.partition(",")
    try:
        return Fraction(lo.strip()), Fraction(hi.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad interval {text!r}") from exc


def _grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid is start:stop:count")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc
    return np.linspace(start, stop, num)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system definition file (JSON) or builtin name: dyadic, golden")
    common.add_argument("--alpha", help="ratios as fractions: '2/5' (two branches) or '1/2,3/10,1/5'")
    common.add_argument("--epsilon", type=float, help="conjugate the system by g_eps")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="kakutani", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="task", required=True)

    p = sub.add_parser("split", parents=[common], help="run the splitting procedure")
    p.add_argument("--stages", type=int)
    p.add_argument("--min-left", type=int, help="stop once this many split left endpoints exist")

    p = sub.add_parser("measure", parents=[common], help="empirical measure of closed intervals")
    p.add_argument("--stages", type=int)
    p.add_argument("--min-left", type=int)
    p.add_argument("--which", choices=("all", "left"), default="left")
    p.add_argument("--interval", type=_interval, action="append", help="lo,hi (repeatable)")

    p = sub.add_parser("renewal", parents=[common], help="renewal counts")
    p.add_argument("--t", help="time value: decimal, log(q) or log:q")
    p.add_argument("--t-grid", type=_grid, help="start:stop:count")
    p.add_argument("--base", default="", help="base word, e.g. '2,1'")
    p.add_argument("--v", default="", help="prefix word for the subtree count")
    p.add_argument("--lattice-span", type=float, help="tag rows with t mod a")

    p = sub.add_parser("thermo", parents=[common], help="transfer-operator eigendata")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--hstar-depth", type=int)

    p = sub.add_parser("lattice", parents=[common], help="lattice detection and reduction")
    p.add_argument("--max-period", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("reproduce", parents=[common], help="canned reproductions with golden checks")
    p.add_argument("case", choices=CASES)
    return parser


def config_from_args(args) -> ExperimentConfig:
    params = {}
    system = None
    if args.task != "reproduce":
        if args.system and args.alpha:
            raise ConfigInvalid("give --system or --alpha, not both")
        system = args.system or (system_from_alpha(args.alpha) if args.alpha else None)
        if args.epsilon is not None:
            params["epsilon"] = args.epsilon
    if args.task in ("split", "measure"):
        params["stages"] = args.stages
        params["min_left"] = args.min_left
        if args.stages is not None and args.min_left is not None:
            raise ConfigInvalid("give --stages or --min-left, not both")
    if args.task == "measure":
        params["which"] = args.which
        params["intervals"] = args.interval
    if args.task == "renewal":
        if (args.t is None) == (args.t_grid is None):
            raise ConfigInvalid("renewal needs exactly one of --t and --t-grid")
        if args.t is not None:
            params["t"] = parse_t(args.t)
        else:
            params["t_grid"] = args.t_grid
        params["base"] = parse_word(args.base)
        params["v"] = parse_word(args.v)
        params["lattice_span"] = args.lattice_span
    if args.task == "thermo":
        params["depth"] = args.depth
        params["hstar_depth"] = args.hstar_depth or args.depth
    if args.task == "lattice":
        params["max_period"] = args.max_period
        params["tol"] = args.tol
    if args.task == "reproduce":
        params["case"] = args.case
    return ExperimentConfig(args.task, system, params, args.out, args.format)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.task == "reproduce":
            bundle = reproduce_paper(cfg.params["case"], cfg.out_dir, strict=False, fmt=cfg.fmt)
            for name, ok, detail in bundle.golden:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            if not bundle.golden_ok:
                raise GoldenMismatch("golden assertions failed",
                                     [(a, d) for a, ok, d in bundle.golden if not ok])
        else:
            bundle = run_experiment(cfg)
        print(json.dumps(bundle.summary, indent=1, sort_keys=True, default=str))
        return EXIT_OK
    except GoldenMismatch as exc:
        print(f"golden mismatch: {exc}", file=sys.stderr)
        return EXIT_GOLDEN
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (KakutaniError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
