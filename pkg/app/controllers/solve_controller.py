"""
Solve Controller - Business logic for the solve, critical and verify commands
"""

import json
import math
from collections import Counter
from typing import Any, Dict, Optional

import numpy as np
import structlog

from app.controllers.common import (
    EXIT_CODES,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    CommandResult,
    guarded,
)
from app.core.config import get_settings
from app.core.critical import find_critical, solve_at_critical
from app.core.csh_solver import ProblemSpec, SolveOutcome, SolverOptions, default_shift, residual, solve_at
from app.core.diagnostics import diagnostics
from app.core.exceptions import GraphMismatchError, RunConfigError
from app.core.graph import VertexFunction, WeightedGraph, check_max_principle
from app.core.linear_solver import vortex_multiplicity
from app.core.nonlinear import NonlinearityKind, evaluate_nonlinearity
from app.models.schemas import (
    CriticalDocument,
    DiagnosticsData,
    TrialItem,
    RunConfig,
    SolveResult,
    VerifyReport,
)
from app.services.export_service import read_json, write_json
from app.services.graph_service import load_graph

app_logger = structlog.get_logger(__name__)


def solver_options(cfg: RunConfig) -> SolverOptions:
    return SolverOptions.from_settings(
        tol=cfg.solver.tol,
        max_iter=cfg.solver.max_iter,
        shift=cfg.solver.shift,
        floor=cfg.solver.floor,
    )


def warn_duplicate_vortices(cfg: RunConfig) -> None:
    repeated = {v: n for v, n in Counter(cfg.vortices).items() if n > 1}
    if repeated:
        app_logger.warning("repeated vortex ids count as multiplicities", multiplicities=repeated)


def solve_result(graph: WeightedGraph, spec: ProblemSpec, outcome: SolveOutcome) -> SolveResult:
    report = None
    if outcome.solved:
        norms = diagnostics(spec, outcome)
        report = DiagnosticsData(
            mean=norms.mean,
            mean_bound=norms.mean_bound,
            mean_below_bound=norms.mean_below_bound,
            grad_norm=norms.grad_norm,
            sobolev_norm=norms.sobolev_norm,
            grad_ratio=norms.grad_ratio,
            sobolev_ratio=norms.sobolev_ratio,
            min_u=norms.min_u,
            mean_u=norms.mean_u,
        )
    return SolveResult(
        graph_sha256=graph.fingerprint,
        equation=spec.kind,
        vortices=list(spec.vortices),
        status=outcome.status.value,
        lam=outcome.lam,
        reason=outcome.reason,
        shift=outcome.shift,
        u=VertexFunction(graph, outcome.u).to_dict() if outcome.u is not None else None,
        iterations=outcome.iterations,
        residual_inf=outcome.residual_inf if math.isfinite(outcome.residual_inf) else None,
        monotone_violations=outcome.monotone_violations,
        trace=[[n, delta, minimum] for n, delta, minimum in outcome.trace],
        diagnostics=report,
    )


class SolveController:
    """Controller for solve, critical and verify"""

    def _emit(self, document: Dict[str, Any], output: Optional[str]) -> None:
        if output:
            write_json(document, output)

    def run_solve(self, cfg: RunConfig) -> CommandResult:
        def body() -> CommandResult:
            warn_duplicate_vortices(cfg)
            graph = load_graph(cfg.graph)
            spec = ProblemSpec(graph=graph, kind=cfg.equation, lam=cfg.lam, vortices=tuple(cfg.vortices))
            outcome = solve_at(spec, solver_options(cfg))
            document = solve_result(graph, spec, outcome).model_dump(by_alias=True)
            self._emit(document, cfg.output)
            return CommandResult(EXIT_CODES[outcome.status], document)

        return guarded("solve", body)

    def run_critical(self, cfg: RunConfig) -> CommandResult:
        def body() -> CommandResult:
            warn_duplicate_vortices(cfg)
            graph = load_graph(cfg.graph)
            options = solver_options(cfg)
            critical = find_critical(graph, cfg.equation, cfg.vortices, options, lam_tol=cfg.lambda_tol)
            limit = solve_at_critical(graph, critical, options)
            spec = ProblemSpec(graph=graph, kind=critical.kind, lam=limit.lam, vortices=critical.vortices)
            ladder = limit.details.get("ladder", [])
            # the ladder may tighten the search bracket; report the one lambda_c sits in
            lo, hi = limit.details.get("bracket", [critical.lam_lo, critical.lam_hi])
            document = CriticalDocument(
                graph_sha256=graph.fingerprint,
                equation=critical.kind,
                vortices=list(critical.vortices),
                lambda_c=limit.lam,
                half_width=0.5 * (hi - lo),
                bracket=[lo, hi],
                analytic_bound=critical.analytic_bound,
                flagged_inconclusive=critical.flagged_inconclusive,
                interval_consistent=critical.interval_consistent,
                family_monotone=limit.details.get("family_monotone"),
                solution_at_critical=solve_result(graph, spec, limit),
                trials=[
                    TrialItem(
                        lam=p.lam,
                        status=p.status.value,
                        iterations=p.iterations,
                        reason=p.reason,
                        phase=p.phase,
                        retried=p.retried,
                    )
                    for p in list(critical.trials) + list(ladder)
                ],
            ).model_dump(by_alias=True)
            self._emit(document, cfg.output)
            return CommandResult(EXIT_OK, document)

        return guarded("critical", body)

    def run_verify(self, cfg: RunConfig) -> CommandResult:
        def body() -> CommandResult:
            graph = load_graph(cfg.graph)
            try:
                payload = read_json(cfg.result)
            except (OSError, json.JSONDecodeError) as e:
                raise RunConfigError(f"Cannot read result file {cfg.result}: {e}", {"path": cfg.result})
            if not isinstance(payload, dict):
                raise RunConfigError("Result file must hold a JSON object")

            stored_hash = payload.get("graph_sha256")
            if stored_hash != graph.fingerprint:
                raise GraphMismatchError(
                    "Result file was produced for a different graph",
                    {"expected": stored_hash, "actual": graph.fingerprint},
                )
            solution = payload.get("solution_at_critical", payload)
            if not isinstance(solution, dict) or not solution.get("u"):
                raise RunConfigError("Result file carries no solution to verify")
            try:
                kind = NonlinearityKind(solution["equation"])
                lam = float(solution["lambda"])
                vortices = [str(v) for v in solution["vortices"]]
            except (KeyError, TypeError, ValueError) as e:
                raise RunConfigError(f"Result file is missing solver metadata: {e}")

            spec = ProblemSpec(graph=graph, kind=kind, lam=lam, vortices=tuple(vortices))
            u = VertexFunction.from_mapping(graph, solution["u"])
            report = self.verify_solution(spec, u)
            document = report.model_dump()
            self._emit(document, cfg.output)
            return CommandResult(EXIT_OK if report.passed else EXIT_VERIFY_FAILED, document)

        return guarded("verify", body)

    def verify_solution(self, spec: ProblemSpec, u: VertexFunction) -> VerifyReport:
        """Residual, sign, vortex charge and max-principle checks of a stored solution."""
        settings = get_settings()
        tol = max(settings.critical_tol, settings.solver_tol)
        graph = spec.graph
        values = u.values
        failures = []

        positive = np.flatnonzero(values >= 0)
        negative = positive.size == 0
        positive_vertex = graph.vertices[int(positive[0])] if positive.size else None
        if not negative:
            failures.append(f"u is not negative at vertex '{positive_vertex}'")

        if spec.kind is NonlinearityKind.GENERALIZED and np.any(values > 0):
            residual_inf, worst_vertex, dirac_ok = math.inf, positive_vertex, False
            failures.append("residual undefined: generalized equation needs u <= 0")
        else:
            pointwise = np.abs(residual(spec, u).values)
            worst = int(np.argmax(pointwise))
            residual_inf, worst_vertex = float(pointwise[worst]), graph.vertices[worst]
            if residual_inf > tol:
                failures.append(f"residual {residual_inf:.3e} exceeds {tol:.1e} at vertex '{worst_vertex}'")

            # charge carried at each vertex, in units of 4 pi
            charge = graph.mu * (graph.apply_laplacian(values) - evaluate_nonlinearity(spec.kind, spec.lam, values))
            charge /= 4.0 * math.pi
            expected = vortex_multiplicity(graph, spec.vortices)
            mismatch = np.abs(charge - expected) > tol * graph.mu / (4.0 * math.pi)
            dirac_ok = not bool(np.any(mismatch))
            if not dirac_ok:
                bad = graph.vertices[int(np.flatnonzero(mismatch)[0])]
                failures.append(f"vortex charge at vertex '{bad}' does not match the declared multiplicity")

        verdict = check_max_principle(graph, u, default_shift(spec.kind, spec.lam), atol=tol)
        if verdict.status == "counterexample":
            failures.append("max-principle premise holds but u has a nonnegative value")

        report = VerifyReport(
            passed=not failures,
            graph_sha256=graph.fingerprint,
            residual_inf=residual_inf,
            worst_vertex=worst_vertex,
            negative=negative,
            positive_vertex=positive_vertex,
            dirac_consistent=dirac_ok,
            max_principle=verdict.status,
            failures=failures,
        )
        app_logger.info("verification finished", passed=report.passed, residual=residual_inf, failures=len(failures))
        return report
