"""
Generate Routes - the generate command
"""

import argparse

from app.controllers.graph_controller import GraphController
from app.routes.common import run

graph_controller = GraphController()


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="Write a named graph family as a graph file", allow_abbrev=False)
    parser.add_argument("family", choices=["path", "cycle", "complete", "torus", "random"])
    parser.add_argument("params", nargs="+", type=float, help="n | n | n | a b | n p")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--random-weights", action="store_true", help="Edge weights uniform in [0.5, 2]")
    parser.add_argument("--random-measure", action="store_true", help="Vertex measure uniform in [0.5, 2]")
    parser.add_argument("--output", default=None, help="Graph file (stdout when omitted)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run(
        graph_controller.run_generate,
        command="generate",
        family=args.family,
        params=args.params,
        seed=args.seed,
        random_weights=args.random_weights,
        random_measure=args.random_measure,
        output=args.output,
    )
