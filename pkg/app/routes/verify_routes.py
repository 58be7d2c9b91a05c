"""
Verify Routes - the verify command
"""

import argparse

from app.controllers.solve_controller import SolveController
from app.routes.common import run

solve_controller = SolveController()


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="Re-check a stored solve or critical result", allow_abbrev=False)
    parser.add_argument("--graph", required=True, help="Graph JSON file the result was computed on")
    parser.add_argument("--result", required=True, help="Result JSON file")
    parser.add_argument("--output", default=None, help="Report file (stdout when omitted)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run(
        solve_controller.run_verify,
        command="verify",
        graph=args.graph,
        result=args.result,
        output=args.output,
    )
