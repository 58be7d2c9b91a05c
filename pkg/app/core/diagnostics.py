"""
Norm diagnostics of maximal solutions across couplings.

For a solution v_lam of the reduced equation the mean part
vbar = (1/|V|) int v dmu and the fluctuation v' = v - vbar are reported, with
||grad v'||_2 compared against a linear envelope in lam and the W^{1,2} norm
against a quadratic one.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import structlog

from app.core.csh_solver import ProblemSpec, SolveOutcome
from app.core.exceptions import InvalidOptionsError
from app.core.graph import sobolev_norm

app_logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class NormReport:
    lam: float
    mean: float
    mean_bound: float
    grad_norm: float
    sobolev_norm: float
    min_u: float
    mean_u: float
    fluctuation_integral: float

    @property
    def grad_ratio(self) -> float:
        return self.grad_norm / self.lam

    @property
    def sobolev_ratio(self) -> float:
        return self.sobolev_norm / (1.0 + self.lam + self.lam * self.lam)

    @property
    def mean_below_bound(self) -> bool:
        return self.mean < self.mean_bound


@dataclass(frozen=True)
class EnvelopeFit:
    grad_exponent: float
    sobolev_exponent: float
    max_grad_ratio: float
    max_sobolev_ratio: float
    points: int


def diagnostics(spec: ProblemSpec, outcome: SolveOutcome) -> NormReport:
    if not outcome.solved:
        raise InvalidOptionsError(f"Diagnostics need a solved outcome, got {outcome.status.value}")
    graph = spec.graph
    v = outcome.solution
    volume = graph.volume
    mean = graph.integrate_array(v) / volume
    fluctuation = v - mean
    gradient_energy = graph.integrate_array(graph.gradient_form_array(fluctuation, fluctuation))
    u = outcome.u
    return NormReport(
        lam=outcome.lam,
        mean=mean,
        mean_bound=-graph.integrate_array(outcome.v0) / volume,
        grad_norm=math.sqrt(max(gradient_energy, 0.0)),
        sobolev_norm=sobolev_norm(graph, v),
        min_u=float(u.min()),
        mean_u=graph.integrate_array(u) / volume,
        fluctuation_integral=graph.integrate_array(fluctuation),
    )


def envelope_exponents(reports: Sequence[NormReport]) -> EnvelopeFit:
    """Least-squares slopes of log(norm) against log(lam)."""
    usable: List[NormReport] = [r for r in reports if r.grad_norm > 0 and r.sobolev_norm > 0]
    if len(usable) < 2:
        raise InvalidOptionsError("Growth exponents need at least two solved couplings")
    log_lam = np.log([r.lam for r in usable])
    grad_slope = np.polyfit(log_lam, np.log([r.grad_norm for r in usable]), 1)[0]
    sobolev_slope = np.polyfit(log_lam, np.log([r.sobolev_norm for r in usable]), 1)[0]
    fit = EnvelopeFit(
        grad_exponent=float(grad_slope),
        sobolev_exponent=float(sobolev_slope),
        max_grad_ratio=max(r.grad_ratio for r in usable),
        max_sobolev_ratio=max(r.sobolev_ratio for r in usable),
        points=len(usable),
    )
    app_logger.debug("envelope fitted", grad_exponent=fit.grad_exponent, sobolev_exponent=fit.sobolev_exponent)
    return fit
