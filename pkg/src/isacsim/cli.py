"""Command line front-end: run, validate, and list experiment pipelines."""

import argparse
import sys

from .config import EXPERIMENTS, parse_config, validate_text
from .experiments import run_experiment
from .utils import ConfigError, ConvergenceError, InfeasibleError

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isac",
        description="Run sensing/communication simulation experiments from JSON configs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--out", help="output directory (overrides output_dir)")
    run_p.add_argument("--seed", type=int, help="root seed (overrides seed)")

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("config", help="path to a JSON experiment config")

    sub.add_parser("list-experiments", help="print the available experiment names")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return EXIT_OK

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    if args.command == "validate":
        diags = validate_text(text)
        for diag in diags:
            print(diag)
        return EXIT_INVALID_CONFIG if diags else EXIT_OK

    try:
        config = parse_config(text)
        manifest = run_experiment(config, out_dir=args.out, seed=args.seed)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    for name in sorted(manifest.outputs):
        print(f"{manifest.out_dir}/{name}")
    print(f"manifest: {manifest.out_dir}/manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
