"""Command-line batch runner.

Subcommands::

    splinepdf run --config study.json [--seed S] [--out results.csv]
    splinepdf oracle --problem NAME --mref M --lref L --seed S
    splinepdf list-problems

Exit status is 0 on success, 2 for a bad configuration and 1 when a numerical
routine fails.  The number of worker processes is capped by the
``SPLINEPDF_WORKERS`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import problems, study
from .errors import ConfigError, NumericalFailure, UndefinedStatistic

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splinepdf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence study from a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    run.add_argument("--out", type=Path, default=None, help="CSV path (overrides config output)")

    orc = sub.add_parser("oracle", help="build and cache a Monte-Carlo reference density")
    orc.add_argument("--problem", required=True)
    orc.add_argument("--mref", required=True, type=_positive)
    orc.add_argument("--lref", required=True, type=_positive)
    orc.add_argument("--seed", required=True, type=_u64)
    orc.add_argument("--cache-dir", type=Path, default=None)

    sub.add_parser("list-problems", help="list the built-in problems")
    return parser


def cmd_run(args) -> int:
    cfg = study.StudyConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out if args.out is not None else cfg.output
    report = study.run_study(cfg)
    if out is None:
        study.write_csv(report, sys.stdout)
    else:
        out = Path(out)
        study.emit_csv(report, out)
        with open(out.with_suffix(".fits.json"), "w") as fh:
            json.dump(study.fits_to_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    for name, fit in report.fits.items():
        print(f"{name}: {fit.amplitude:.4g} N^{fit.exponent:.3f} (r^2 = {fit.r_squared:.3f})",
              file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.lref > args.mref:
        raise ConfigError("--lref must not exceed --mref")
    try:
        problem = problems.get_problem(args.problem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    root = args.cache_dir if args.cache_dir is not None else problems.cache_dir()
    problems.oracle_histogram(problem, args.mref, args.lref, args.seed, root=root)
    print(problems.oracle_path(problem, args.mref, args.lref, args.seed, root=root))
    return EXIT_OK


def cmd_list_problems(args) -> int:
    for name in sorted(problems.PROBLEMS):
        p = problems.get_problem(name)
        print(f"{name}\t{p.dim}-D\t{p.reference}\t{p.description}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "oracle": cmd_oracle, "list-problems": cmd_list_problems}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, UndefinedStatistic, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
