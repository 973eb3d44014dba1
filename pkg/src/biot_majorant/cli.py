"""Command line entry point: ``biot-majorant {run,convergence,check}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .checks import run_checks
from .experiment import ConfigError, ExperimentConfig, convergence_study, run_experiment
from .solvers import SolverError


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biot-majorant", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment and write report.json"),
                        ("convergence", "run a refinement study and write convergence.csv")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="INI file with an [experiment] section")
        s.add_argument("--out", help="output directory (overrides output_dir)")
        s.add_argument("--mode", choices=("paper", "tight"), help="estimator mode (overrides config)")
    sub.add_parser("check", help="run the fast invariant suite")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "check":
        failed = 0
        for name, ok, detail in run_checks():
            print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
            failed += not ok
        return 1 if failed else 0

    try:
        config = ExperimentConfig.from_file(args.config, mode=args.mode, output_dir=args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            report = run_experiment(config)
        else:
            report, table = convergence_study(config)
            print(table, end="")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    ok = report["summary"]["all_guarantees_hold"]
    if not ok:
        print("guarantee violated on at least one mesh", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
