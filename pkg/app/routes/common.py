"""
Shared route helpers: config validation, solver flags and output emission
"""

import argparse
import sys
from typing import Any

from pydantic import ValidationError

from app.controllers.common import CommandResult, failure
from app.core.exceptions import RunConfigError
from app.core.nonlinear import NonlinearityKind
from app.models.schemas import RunConfig
from app.services.export_service import render_json


def add_problem_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", required=True, help="Graph JSON file")
    parser.add_argument(
        "--equation",
        required=True,
        choices=[kind.value for kind in NonlinearityKind],
        help="Equation variant",
    )
    parser.add_argument(
        "--vortex",
        dest="vortices",
        action="append",
        default=[],
        help="Vortex vertex id; repeat for more vortices (repeats add multiplicity)",
    )


def add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=None, help="Step and residual tolerance")
    parser.add_argument("--max-iter", type=int, default=None, help="Iteration cap per solve")
    parser.add_argument("--shift", type=float, default=None, help="Override the shift K")
    parser.add_argument("--floor", type=float, default=None, help="Divergence floor on min psi")
    parser.add_argument("--output", default=None, help="Result file (stdout when omitted)")


def solver_section(args: argparse.Namespace) -> dict:
    return {"tol": args.tol, "max_iter": args.max_iter, "shift": args.shift, "floor": args.floor}


def build_config(**fields: Any) -> RunConfig:
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or fields.get("command", "config")
        raise RunConfigError(f"Invalid {fields.get('command')} options: {field}: {first['msg']}", {"field": field})


def run(handler, **fields: Any) -> int:
    """Validate the config, run the controller and write its output."""
    try:
        cfg = build_config(**fields)
    except RunConfigError as e:
        return emit(failure(e), to_stdout=True)
    result = handler(cfg)
    return emit(result, to_stdout=not cfg.output or result.exit_code == 1)


def emit(result: CommandResult, to_stdout: bool) -> int:
    if result.text is not None:
        sys.stdout.write(result.text)
    elif to_stdout and result.document is not None:
        sys.stdout.write(render_json(result.document))
    sys.stdout.flush()
    return result.exit_code
