"""
Solve Routes - the solve command
"""

import argparse

from app.controllers.solve_controller import SolveController
from app.routes.common import add_problem_arguments, add_solver_arguments, run, solver_section

solve_controller = SolveController()


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="Maximal solution at one coupling", allow_abbrev=False)
    add_problem_arguments(parser)
    parser.add_argument("--lambda", dest="lam", type=float, required=True, help="Coupling lambda > 0")
    add_solver_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run(
        solve_controller.run_solve,
        command="solve",
        graph=args.graph,
        equation=args.equation,
        lam=args.lam,
        vortices=args.vortices,
        solver=solver_section(args),
        output=args.output,
    )
