"""
spane-kit - Main Entry Point

Usage: spane-kit <command> --config <path> [--seed N] [--out DIR] [--jobs N] [-v]
"""

import argparse
import sys
from typing import List, Optional

from .cli.commands import COMMAND_RUNNERS
from .cli.config import COMMANDS, load_config
from .cli.run_log import RunLog, configure_console
from .utils.errors import ConfigError, SpaneError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spane-kit",
        description="Batch evaluation of speaker anonymization on pathological speech.",
    )
    parser.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="global seed (overrides the config)")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more console output")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Application entry point; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"spane-kit: unknown command {args.command!r} (choose from {', '.join(COMMANDS)})", file=sys.stderr)
        return EXIT_CONFIG

    configure_console(args.verbose)
    try:
        config = load_config(args.command, args.config, seed=args.seed, out=args.out, jobs=args.jobs)
    except ConfigError as e:
        print(f"spane-kit: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with RunLog(config) as run_log:
            counts = COMMAND_RUNNERS[config.command](config)
            run_log.counts(counts)
    except ConfigError as e:
        print(f"spane-kit: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SpaneError as e:
        print(f"spane-kit: {config.command} failed: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
