"""Refinement study from an INI config; prints the convergence table.

    python3 scripts/run_convergence.py configs/ms1_convergence.ini
"""
import argparse

from biot_majorant.experiment import ExperimentConfig, convergence_study


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--mode", choices=("paper", "tight"))
    args = p.parse_args()
    config = ExperimentConfig.from_file(args.config, output_dir=args.out, mode=args.mode)
    report, table = convergence_study(config)
    print(table, end="")
    print("all guarantees hold:", report["summary"]["all_guarantees_hold"])


if __name__ == "__main__":
    main()
