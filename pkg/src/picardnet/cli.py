"""Command-line entry point: ``picardnet {solve,compile,pipeline,interp}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, with_overrides
from .mlp import ResourceLimitError
from .runner import COMMANDS, EXIT_CEILING, EXIT_CHECK, EXIT_CONFIG

log = logging.getLogger("picardnet")

_DESCRIPTIONS = {
    "solve": "Evaluate the multilevel Picard estimator at configured points and compare with a reference.",
    "compile": "Compile one estimator realization into a ReLU network and check it against direct evaluation.",
    "pipeline": "Size, build and measure networks over a (d, eps) grid.",
    "interp": "Build clipped piecewise-linear networks for named scalar functions.",
}

EXIT_HELP = """exit codes:
  0  success
  2  configuration error
  3  a check failed (equivalence, bounds, accuracy or fit)
  4  resource ceiling exceeded
"""


def _epilog(columns: dict) -> str:
    width = max(len(c) for c in columns)
    lines = ["report.csv columns:"]
    lines += [f"  {name.ljust(width)}  {text}" for name, text in columns.items()]
    return "\n".join(lines) + "\n\n" + EXIT_HELP


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picardnet",
        description="Multilevel Picard approximations and their ReLU network compilation.",
        epilog=EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, columns) in COMMANDS.items():
        p = sub.add_parser(
            name,
            help=_DESCRIPTIONS[name],
            description=_DESCRIPTIONS[name],
            epilog=_epilog(columns),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", type=Path, help="JSON run configuration (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="master seed, overrides the config")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--threads", type=int, help="worker threads, overrides the config")
        p.add_argument("--ceiling", type=int, help="evaluation ceiling, overrides the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.ceiling is not None and args.ceiling < 1:
            raise ConfigError("--ceiling must be >= 1")
        cfg = with_overrides(cfg, seed=args.seed, threads=args.threads, ceiling=args.ceiling)
        args.out.mkdir(parents=True, exist_ok=True)
        run, _ = COMMANDS[args.command]
        log.info("running %s into %s", args.command, args.out)
        rows, code = run(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return EXIT_CEILING
    verdict = "FAIL" if code == EXIT_CHECK else "PASS"
    print(f"{args.command}: {len(rows)} rows written to {args.out / 'report.csv'} [{verdict}]")
    return code


if __name__ == "__main__":
    sys.exit(main())
