"""
Sweep Routes - the sweep command
"""

import argparse

from app.controllers.analytics_controller import AnalyticsController
from app.routes.common import add_problem_arguments, add_solver_arguments, run, solver_section

analytics_controller = AnalyticsController()


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sweep", help="Solve across a coupling grid and tabulate norms (CSV)", allow_abbrev=False
    )
    add_problem_arguments(parser)
    parser.add_argument("--lambda-min", type=float, required=True)
    parser.add_argument("--lambda-max", type=float, required=True)
    parser.add_argument("--steps", type=int, required=True)
    parser.add_argument("--geometric", action="store_true", help="Geometric instead of linear spacing")
    parser.add_argument("--workers", type=int, default=None, help="Worker pool size")
    add_solver_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run(
        analytics_controller.run_sweep,
        command="sweep",
        graph=args.graph,
        equation=args.equation,
        lambda_min=args.lambda_min,
        lambda_max=args.lambda_max,
        steps=args.steps,
        geometric=args.geometric,
        workers=args.workers,
        vortices=args.vortices,
        solver=solver_section(args),
        output=args.output,
    )
