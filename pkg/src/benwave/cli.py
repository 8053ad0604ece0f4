"""Command-line entry point.

Subcommands:

* ``run <config-or-name>``: execute an experiment, either a config file
  path or the name of a bundled experiment.
* ``list``: show the bundled experiment registry.
* ``verify <report.json>``: recheck a run report's thresholds offline.

Exit codes: 0 success (all report checks passed), 1 report checks failed
or verification mismatch, 2 configuration error, 3 solver divergence or a
velocity in the nonexistence window, 4 evolution blow-up.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .evolution import BlowUpError
from .harness import find_config, list_experiments, run_experiment, resolve_output_dir
from .io import read_report, reverify_report
from .waves import NewtonDivergedError, NonexistenceError

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="benwave",
        description="Spectral solitary-wave and time-evolution experiments "
        "for nonlocal dispersive wave equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="config file path or bundled experiment name")
    run_p.add_argument("--output", "-o", default=None, help="output directory")
    run_p.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering (CSV/snapshots only)"
    )

    sub.add_parser("list", help="list bundled experiments")

    verify_p = sub.add_parser("verify", help="recheck a report's thresholds offline")
    verify_p.add_argument("report", help="path to a report.json")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        path = find_config(args.config)
        config = load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(
            config, output_dir=args.output, render_figures=not args.no_figures
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonexistenceError as exc:
        print(f"refused: nonexistence window: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except NewtonDivergedError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    outdir = resolve_output_dir(config, args.output)
    status = "PASS" if report.passed else "FAIL"
    print(f"{config.name}: {status} ({len(report.checks)} checks) -> {outdir}")
    for check in report.checks:
        mark = "ok" if check.passed else "FAIL"
        print(f"  [{mark}] {check.name}: {check.value:.6g} {check.op} {check.threshold:.6g}")
    return EXIT_OK if report.passed else EXIT_CHECKS_FAILED


def _cmd_list() -> int:
    entries = list_experiments()
    name_w = max(len(e.name) for e in entries)
    kind_w = max(len(e.kind) for e in entries)
    for e in entries:
        grid = f"N=2^{e.n_modes.bit_length() - 1}" if e.n_modes & (e.n_modes - 1) == 0 else f"N={e.n_modes}"
        print(f"{e.name:<{name_w}}  {e.kind:<{kind_w}}  {grid:<7} L={e.scale:<5g} {e.description}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        doc = read_report(args.report)
    except (OSError, ValueError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok, lines = reverify_report(doc)
    print(f"{doc['name']} ({doc['kind']})")
    for line in lines:
        print(f"  {line}")
    print("verification: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list":
        return _cmd_list()
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
