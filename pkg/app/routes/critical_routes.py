"""
Critical Routes - the critical command
"""

import argparse

from app.controllers.solve_controller import SolveController
from app.routes.common import add_problem_arguments, add_solver_arguments, run, solver_section

solve_controller = SolveController()


def register(subparsers) -> None:
    parser = subparsers.add_parser("critical", help="Bracket the critical coupling and solve at it", allow_abbrev=False)
    add_problem_arguments(parser)
    parser.add_argument("--lambda-tol", type=float, default=None, help="Bracket width")
    add_solver_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run(
        solve_controller.run_critical,
        command="critical",
        graph=args.graph,
        equation=args.equation,
        lambda_tol=args.lambda_tol,
        vortices=args.vortices,
        solver=solver_section(args),
        output=args.output,
    )
