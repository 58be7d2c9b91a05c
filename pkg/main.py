#!/usr/bin/env python3
"""
Command-line front-end for the Chern-Simons-Higgs graph solver.

Commands: solve, critical, sweep, verify, generate. Exit codes: 0 success
(Solved / verification passed), 1 input error, 2 NoSolution (or failed
verification), 3 Inconclusive.
"""

import argparse
import sys
from typing import List, Optional

from app.core.config import get_settings
from app.core.logging_config import configure_logging
from app.routes import COMMAND_ROUTES


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="csh-graph",
        allow_abbrev=False,
        description=settings.app_description,
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["debug", "info", "warning", "error", "critical"],
        help="Log verbosity (stderr)",
    )
    parser.add_argument("--log-format", default=settings.log_format, choices=["console", "json"])

    subparsers = parser.add_subparsers(dest="command", required=True)
    for route in COMMAND_ROUTES:
        route.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad flags; 2 is reserved for NoSolution
        return 0 if e.code in (0, None) else 1
    configure_logging(args.log_level, args.log_format)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
