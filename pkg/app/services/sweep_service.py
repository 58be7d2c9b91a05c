"""
Sweep Service - solve one instance across a grid of couplings

Grid points are independent instances and run on a thread pool; the linear
algebra releases the GIL for most of each solve.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog

from app.core.config import get_settings
from app.core.csh_solver import ProblemSpec, SolveOutcome, SolverOptions, SolveStatus, reduce, solve_at
from app.core.diagnostics import EnvelopeFit, diagnostics, envelope_exponents
from app.core.exceptions import InvalidOptionsError

app_logger = structlog.get_logger(__name__)

SWEEP_COLUMNS = [
    "lambda",
    "status",
    "min_u",
    "mean_u",
    "grad_norm",
    "sobolev_norm",
    "iterations",
    "monotone_ok",
]
_MONOTONE_SLACK = 1e-10


@dataclass
class SweepResult:
    table: pd.DataFrame
    outcomes: List[SolveOutcome]
    pointwise_monotone: bool
    single_transition: bool
    envelope: Optional[EnvelopeFit]


def lambda_grid(lam_min: float, lam_max: float, steps: int, geometric: bool = False) -> np.ndarray:
    if not (0 < lam_min <= lam_max) or steps < 1:
        raise InvalidOptionsError("Sweep needs 0 < lambda_min <= lambda_max and steps >= 1")
    if steps == 1:
        return np.array([lam_min])
    if geometric:
        return np.geomspace(lam_min, lam_max, steps)
    return np.linspace(lam_min, lam_max, steps)


def _single_transition(statuses: Sequence[SolveStatus]) -> bool:
    """Verdicts along increasing lambda switch from unsolved to Solved at most once."""
    solved = [status is SolveStatus.SOLVED for status in statuses]
    return all(not earlier or later for earlier, later in zip(solved, solved[1:]))


def run_sweep(
    spec: ProblemSpec,
    lambdas: Sequence[float],
    options: Optional[SolverOptions] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    options = options or SolverOptions.from_settings()
    workers = workers or get_settings().workers or os.cpu_count() or 1
    reduced = reduce(spec)
    points = [spec.with_lambda(lam) for lam in sorted(float(lam) for lam in lambdas)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda point: solve_at(point, options, reduced=reduced), points))

    rows = []
    reports = []
    previous: Optional[np.ndarray] = None
    pointwise_monotone = True
    for point, outcome in zip(points, outcomes):
        row = {
            "lambda": point.lam,
            "status": outcome.status.value,
            "min_u": np.nan,
            "mean_u": np.nan,
            "grad_norm": np.nan,
            "sobolev_norm": np.nan,
            "iterations": outcome.iterations,
            "monotone_ok": True,
        }
        if outcome.solved:
            report = diagnostics(point, outcome)
            reports.append(report)
            row.update(
                min_u=report.min_u,
                mean_u=report.mean_u,
                grad_norm=report.grad_norm,
                sobolev_norm=report.sobolev_norm,
            )
            if previous is not None and not np.all(outcome.solution - previous > -_MONOTONE_SLACK):
                row["monotone_ok"] = False
                pointwise_monotone = False
                app_logger.warning("sweep solutions not increasing in lambda", lam=point.lam)
            previous = outcome.solution
        rows.append(row)

    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    single = _single_transition([o.status for o in outcomes])
    if not single:
        app_logger.warning("sweep verdicts switch more than once")
    envelope = envelope_exponents(reports) if len(reports) >= 2 else None
    app_logger.info(
        "sweep finished",
        points=len(points),
        solved=len(reports),
        workers=workers,
        monotone=pointwise_monotone,
        single_transition=single,
    )
    return SweepResult(
        table=table,
        outcomes=outcomes,
        pointwise_monotone=pointwise_monotone,
        single_transition=single,
        envelope=envelope,
    )
