"""Command line front end. Every subcommand prints a JSON report.

Exit status: 0 when every check passes, 1 when a check fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .reporting import CACHE_ENV, ConfigError, RunConfig, run_suite

COMMANDS = {"roots": "roots", "mns": "mns", "flatness": "flatness", "monodromy": "monodromy",
            "braid-check": "braid", "cocycle": "cocycle", "dcp": "dcp", "affine": "affine"}


def _weights(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace("(", "").replace(")", "").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad weight {text!r}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON run configuration; command line options override it")
    p.add_argument("--gcm", help="Cartan type (A2, B2, G2, A1~, A2xA1) or a JSON/YAML file with the matrix")
    p.add_argument("--hw", type=_weights, help="highest weight, comma separated")
    p.add_argument("--depth", type=int, help="delta-depth truncation for affine modules")
    p.add_argument("--max-height", type=int, help="height truncation of the module")
    p.add_argument("--h", action="append", dest="hbar", help="value of hbar (complex, e.g. 0.1+0.05j); repeatable")
    p.add_argument("--tol", type=float, help="transport tolerance")
    p.add_argument("--budget", type=float, help="pass budget of the command's residuals")
    p.add_argument("--seed", type=int, help="seed for sample points and gauge pairs")
    p.add_argument("--out", help="output directory for report.json (and eigenvalues.csv)")
    p.add_argument("--csv", action="store_true", help="also write eigenvalue trajectories as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmcasimir",
        description=f"Casimir connection checks. Persisted matrices go to ${CACHE_ENV} (or <out>/store).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {COMMANDS[name]} suite")
        _common(p)
        if name == "monodromy":
            p.add_argument("--gen", type=int, action="append", help="generator index (repeatable)")
        if name == "braid-check":
            p.add_argument("--gauge-pairs", type=int, help="number of random (a, b) gauge pairs")
        if name == "affine":
            p.add_argument("--points", type=int, help="sample points for the functional equations")
    p = sub.add_parser("report", help="run the suites selected in a config file")
    _common(p)
    p.add_argument("--suite", action="append", dest="suites", help="override the suite selection (repeatable)")
    return parser


_BUDGET_KEY = {"monodromy": "monodromy", "braid": "braid", "dcp": "dcp", "affine": "functional"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        data = RunConfig.from_file(args.config).__dict__.copy()
    overrides = {"gcm": args.gcm, "highest_weight": args.hw, "depth": args.depth,
                 "max_height": args.max_height, "hbar": args.hbar, "seed": args.seed, "output_dir": args.out}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.csv:
        data["eigenvalue_csv"] = True
    tols = dict(data.get("tolerances") or {})
    if args.tol is not None:
        tols["transport"] = args.tol
    suite = COMMANDS.get(args.command)
    if args.budget is not None and suite in _BUDGET_KEY:
        tols[_BUDGET_KEY[suite]] = args.budget
    data["tolerances"] = tols
    if suite is not None:
        data["suites"] = [suite]
    elif getattr(args, "suites", None):
        data["suites"] = args.suites
    if getattr(args, "gen", None):
        data["generators"] = args.gen
    if getattr(args, "gauge_pairs", None) is not None:
        data["gauge_pairs"] = args.gauge_pairs
    if getattr(args, "points", None) is not None:
        data["sample_points"] = args.points
    return RunConfig.from_mapping(data)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report = run_suite(config)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    print(report.dumps())
    for c in report.failures:
        print(f"FAIL {c.id}: residual {c.residual:.3e} ({c.anchor})", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
