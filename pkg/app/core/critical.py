"""
Critical coupling search.

The set of couplings with a solution is an upward-closed interval, so
bisection between the analytic lower bound and a doubling-found solvable
coupling brackets its infimum. Trials below the threshold rely on the
divergence heuristic of ``solve_at``; every Inconclusive trial is re-run with a
larger iteration budget and recorded.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import structlog

from app.core.config import get_settings
from app.core.csh_solver import (
    ProblemSpec,
    ReducedProblem,
    SolveOutcome,
    SolverOptions,
    SolveStatus,
    reduce,
    residual,
    solve_at,
)
from app.core.exceptions import CriticalSearchError, InvalidOptionsError
from app.core.graph import WeightedGraph
from app.core.nonlinear import NonlinearityKind, analytic_lambda_bound

app_logger = structlog.get_logger(__name__)

_FAMILY_SLACK = 1e-10
_GAP_PROGRESS = 0.99


@dataclass(frozen=True)
class Trial:
    lam: float
    status: SolveStatus
    iterations: int
    reason: str
    phase: str
    retried: bool = False


@dataclass
class CriticalResult:
    kind: NonlinearityKind
    vortices: tuple
    lam_lo: float
    lam_hi: float
    lam_tol: float
    analytic_bound: float
    solution_at_hi: SolveOutcome
    trials: List[Trial] = field(default_factory=list)

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lam_lo + self.lam_hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.lam_hi - self.lam_lo)

    @property
    def flagged_inconclusive(self) -> bool:
        """True when some trial needed a re-run or stayed Inconclusive."""
        return any(p.retried or p.status is SolveStatus.INCONCLUSIVE for p in self.trials)

    @property
    def interval_consistent(self) -> bool:
        """Solved trials all lie above every unsolved trial."""
        solved = [p.lam for p in self.trials if p.status is SolveStatus.SOLVED]
        unsolved = [p.lam for p in self.trials if p.status is not SolveStatus.SOLVED]
        if not solved or not unsolved:
            return True
        return min(solved) > max(unsolved)


def _trial(
    spec: ProblemSpec,
    reduced: ReducedProblem,
    options: SolverOptions,
    phase: str,
    trials: List[Trial],
    psi0: Optional[np.ndarray] = None,
    retry_factor: Optional[int] = None,
) -> SolveOutcome:
    """solve_at with one re-run at a larger budget when the verdict is Inconclusive.

    A run that ran out of iterations is resumed from its last iterate, which is
    still an upper solution; any other Inconclusive run restarts from ``psi0``.
    """
    factor = get_settings().retry_factor if retry_factor is None else retry_factor

    def attempt(opts: SolverOptions, start: Optional[np.ndarray]) -> SolveOutcome:
        if start is not None:
            try:
                return solve_at(spec, opts, psi0=start, reduced=reduced)
            except InvalidOptionsError:
                app_logger.warning("warm start rejected, restarting from -v0", lam=spec.lam)
        return solve_at(spec, opts, reduced=reduced)

    outcome = attempt(options, psi0)
    spent = outcome.iterations
    retried = False
    if outcome.status is SolveStatus.INCONCLUSIVE and factor > 1:
        resume = outcome.reason.startswith("max-iter") and outcome.last_iterate is not None
        app_logger.warning(
            "inconclusive trial, re-running with a larger budget",
            lam=spec.lam,
            phase=phase,
            reason=outcome.reason,
            max_iter=options.max_iter * factor,
            resumed=resume,
        )
        start = outcome.last_iterate if resume else psi0
        outcome = attempt(dataclasses.replace(options, max_iter=options.max_iter * factor), start)
        spent += outcome.iterations
        retried = True
    trials.append(
        Trial(
            lam=spec.lam,
            status=outcome.status,
            iterations=spent,
            reason=outcome.reason,
            phase=phase,
            retried=retried,
        )
    )
    return outcome


def find_critical(
    graph: WeightedGraph,
    kind: NonlinearityKind,
    vortices: Sequence[str],
    options: Optional[SolverOptions] = None,
    lam_tol: Optional[float] = None,
    cap_factor: Optional[float] = None,
) -> CriticalResult:
    """Bracket lambda_c within lam_tol by doubling then bisection."""
    settings = get_settings()
    options = options or SolverOptions.from_settings()
    lam_tol = settings.lambda_tol if lam_tol is None else lam_tol
    cap_factor = settings.critical_cap_factor if cap_factor is None else cap_factor
    if not lam_tol > 0:
        raise InvalidOptionsError(f"lambda tolerance must be positive, got {lam_tol}")

    kind = NonlinearityKind(kind)
    bound = analytic_lambda_bound(kind, len(vortices), graph.volume)
    base = ProblemSpec(graph=graph, kind=kind, lam=2.0 * bound, vortices=tuple(vortices))
    reduced = reduce(base)
    trials: List[Trial] = [
        Trial(lam=bound, status=SolveStatus.NO_SOLUTION, iterations=0, reason="analytic-bound", phase="bound")
    ]

    lo, hi = bound, 2.0 * bound
    while True:
        outcome = _trial(base.with_lambda(hi), reduced, options, "doubling", trials)
        if outcome.solved:
            break
        lo = hi
        hi *= 2.0
        if hi > cap_factor * bound:
            raise CriticalSearchError(
                f"No solution found below {cap_factor:g} x the analytic bound {bound:.6g}",
                {"analytic_bound": bound, "last_lambda": lo},
            )
    best = outcome

    while hi - lo > lam_tol:
        mid = 0.5 * (lo + hi)
        outcome = _trial(base.with_lambda(mid), reduced, options, "bisection", trials, psi0=best.solution)
        if outcome.solved:
            hi, best = mid, outcome
        else:
            lo = mid

    result = CriticalResult(
        kind=kind,
        vortices=tuple(vortices),
        lam_lo=lo,
        lam_hi=hi,
        lam_tol=lam_tol,
        analytic_bound=bound,
        solution_at_hi=best,
        trials=trials,
    )
    app_logger.info(
        "critical coupling bracketed",
        kind=kind.value,
        lam_lo=lo,
        lam_hi=hi,
        estimate=result.estimate,
        trials=len(trials),
        flagged=result.flagged_inconclusive,
    )
    return result


def _strictly_decreasing_family(family: List[tuple]) -> bool:
    ordered = sorted(family, key=lambda item: item[0], reverse=True)
    for (lam_big, v_big), (lam_small, v_small) in zip(ordered, ordered[1:]):
        if lam_big > lam_small and not np.all(v_big - v_small > -_FAMILY_SLACK):
            return False
    return True


def solve_at_critical(
    graph: WeightedGraph,
    critical: CriticalResult,
    options: Optional[SolverOptions] = None,
    halvings: Optional[int] = None,
    tol: Optional[float] = None,
    refinements: Optional[int] = None,
    patience: Optional[int] = None,
) -> SolveOutcome:
    """Maximal solution at the critical coupling as the limit lambda -> lambda_c from above.

    Solves at lambda_c_est + lam_tol 2^-k with warm starts, checks that the
    family decreases with lambda, and accepts the last solution once its
    residual at the estimate is within ``tol``. A failed trial below the
    ladder shows the estimate sits under lambda_c; the bracket is then
    tightened from below and the ladder continues. The ladder gives up once
    ``patience`` consecutive trials fail to cut the residual by one percent.
    """
    settings = get_settings()
    options = options or SolverOptions.from_settings()
    halvings = settings.critical_halvings if halvings is None else halvings
    tol = settings.critical_tol if tol is None else tol
    refinements = settings.critical_refinements if refinements is None else refinements
    patience = settings.critical_patience if patience is None else patience

    best = critical.solution_at_hi
    if not best.solved:
        raise InvalidOptionsError("Critical result carries no solution at the upper end of its bracket")
    spec = ProblemSpec(graph=graph, kind=critical.kind, lam=critical.lam_hi, vortices=critical.vortices)
    reduced = dataclasses.replace(reduce(spec), v0=best.v0)

    lo, hi = critical.lam_lo, critical.lam_hi
    family = [(hi, best.solution)]
    ladder: List[Trial] = []
    epsilon = critical.lam_tol
    step = 0
    best_gap = math.inf
    stale = 0
    moved = True

    def residual_at(lam: float, outcome: SolveOutcome) -> float:
        return float(np.abs(residual(spec.with_lambda(lam), outcome.u).values).max())

    while True:
        estimate = 0.5 * (lo + hi)
        gap = residual_at(estimate, best)
        if gap <= tol:
            break
        if moved:
            if gap < _GAP_PROGRESS * best_gap:
                best_gap, stale = gap, 0
            else:
                stale += 1
            moved = False
        exhausted = step > halvings + refinements
        if exhausted or stale >= patience:
            cause = "ladder exhausted" if exhausted else f"no progress over {stale} trials"
            outcome = dataclasses.replace(
                best,
                status=SolveStatus.INCONCLUSIVE,
                lam=estimate,
                solution=None,
                u=None,
                residual_inf=gap,
                reason=f"critical-residual: {gap:.3e} above {tol:.1e} at the estimate ({cause})",
                details={"ladder": ladder, "bracket": [lo, hi], "family_monotone": _strictly_decreasing_family(family)},
            )
            app_logger.warning("critical solution not accepted", estimate=estimate, residual=gap, cause=cause)
            return outcome

        lam = estimate + epsilon * 2.0 ** (-step) if step <= halvings else estimate
        lam = min(lam, hi)
        step += 1
        if lam >= hi:
            continue
        outcome = _trial(spec.with_lambda(lam), reduced, options, "ladder", ladder, psi0=best.solution)
        moved = True
        if outcome.solved:
            hi, best = lam, outcome
            family.append((lam, outcome.solution))
        else:
            lo = lam

    family_monotone = _strictly_decreasing_family(family)
    if not family_monotone:
        app_logger.warning("maximal solutions do not decrease with lambda", points=len(family))
    u = best.v0 + best.solution
    negative = bool(np.all(u < 0))
    status = SolveStatus.SOLVED if negative else SolveStatus.INCONCLUSIVE
    app_logger.info(
        "critical solution accepted" if negative else "critical solution not negative",
        estimate=estimate,
        residual=gap,
        ladder=len(ladder),
    )
    return dataclasses.replace(
        best,
        status=status,
        lam=estimate,
        residual_inf=gap,
        reason="accepted-at-estimate" if negative else "critical-solution-not-negative",
        details={
            "ladder": ladder,
            "bracket": [lo, hi],
            "family_monotone": family_monotone,
            "solved_at": hi,
        },
    )
