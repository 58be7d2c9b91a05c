"""
Analytics Controller - Business logic for coupling sweeps
"""

import structlog

from app.controllers.common import EXIT_OK, CommandResult, guarded
from app.controllers.solve_controller import solver_options, warn_duplicate_vortices
from app.core.csh_solver import ProblemSpec
from app.models.schemas import RunConfig
from app.services.export_service import render_csv, write_csv
from app.services.graph_service import load_graph
from app.services.sweep_service import lambda_grid, run_sweep

app_logger = structlog.get_logger(__name__)


class AnalyticsController:
    """Controller for sweep tables"""

    def run_sweep(self, cfg: RunConfig) -> CommandResult:
        def body() -> CommandResult:
            warn_duplicate_vortices(cfg)
            graph = load_graph(cfg.graph)
            spec = ProblemSpec(graph=graph, kind=cfg.equation, lam=cfg.lambda_min, vortices=tuple(cfg.vortices))
            grid = lambda_grid(cfg.lambda_min, cfg.lambda_max, cfg.steps, cfg.geometric)
            sweep = run_sweep(spec, grid, solver_options(cfg), workers=cfg.workers)

            summary = {
                "rows": len(sweep.table),
                "solved": int((sweep.table["status"] == "Solved").sum()),
                "pointwise_monotone": sweep.pointwise_monotone,
                "single_transition": sweep.single_transition,
            }
            if sweep.envelope is not None:
                summary.update(
                    grad_exponent=sweep.envelope.grad_exponent,
                    sobolev_exponent=sweep.envelope.sobolev_exponent,
                    max_grad_ratio=sweep.envelope.max_grad_ratio,
                    max_sobolev_ratio=sweep.envelope.max_sobolev_ratio,
                )
            if cfg.output:
                write_csv(sweep.table, cfg.output)
                return CommandResult(EXIT_OK, summary)
            return CommandResult(EXIT_OK, summary, text=render_csv(sweep.table))

        return guarded("sweep", body)
