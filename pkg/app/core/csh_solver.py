"""
Monotone upper/lower-solution iteration for the Chern-Simons-Higgs equations on
a finite graph.

Full equation:    Delta u = H(u) + 4 pi sum_j delta_{p_j}
Reduced equation: Delta v = H(v0 + v) + 4 pi N / |V|,  u = v0 + v,
where v0 is the mean-zero solution of Delta v0 = -4 pi N/|V| + 4 pi sum_j delta_{p_j}.
Starting from the upper solution psi0 = -v0 the iterates
(Delta - K) psi_n = H(v0 + psi_{n-1}) - K psi_{n-1} + 4 pi N/|V|
decrease strictly and converge to the maximal solution whenever one exists.
"""

import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import minimize_scalar

from app.core.config import get_settings
from app.core.exceptions import (
    InvalidOptionsError,
    InvalidProblemError,
    LinearSolverError,
    NonlinearDomainError,
    RegimeViolationError,
    UnknownVortexError,
)
from app.core.graph import FunctionLike, VertexFunction, WeightedGraph, as_array
from app.core.linear_solver import (
    PoissonProblem,
    ShiftedOperator,
    dirac_source,
    solve_poisson,
    vortex_multiplicity,
)
from app.core.nonlinear import (
    NonlinearityKind,
    analytic_lambda_bound,
    evaluate_nonlinearity,
    lipschitz_bound,
    turning_point,
)

app_logger = structlog.get_logger(__name__)

_CHAIN_SLACK = 1e-13
_CERTIFICATE_MARGIN = 1e-9


class SolveStatus(str, Enum):
    SOLVED = "Solved"
    NO_SOLUTION = "NoSolution"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ProblemSpec:
    """One equation instance: variant, coupling and vortex multiset on a graph."""

    graph: WeightedGraph
    kind: NonlinearityKind
    lam: float
    vortices: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        object.__setattr__(self, "vortices", tuple(self.vortices))
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam) and self.lam > 0):
            raise InvalidProblemError(f"Coupling lambda must be a positive real, got {self.lam}")
        if len(self.vortices) == 0:
            raise InvalidProblemError("At least one vortex is required")
        for vertex in self.vortices:
            if vertex not in self.graph:
                raise UnknownVortexError(f"Vortex '{vertex}' is not a vertex of the graph", {"vertex": vertex})

    @property
    def vortex_count(self) -> int:
        return len(self.vortices)

    @property
    def analytic_bound(self) -> float:
        return analytic_lambda_bound(self.kind, self.vortex_count, self.graph.volume)

    def with_lambda(self, lam: float) -> "ProblemSpec":
        return dataclasses.replace(self, lam=float(lam))


@dataclass(frozen=True)
class SolverOptions:
    shift: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 20000
    floor: Optional[float] = None
    linear_tol: float = 1e-13
    stall_window: int = 25

    @classmethod
    def from_settings(cls, **overrides: Any) -> "SolverOptions":
        """Defaults from Settings; None-valued overrides are ignored."""
        settings = get_settings()
        values = {
            "tol": settings.solver_tol,
            "max_iter": settings.max_iter,
            "linear_tol": settings.linear_tol,
            "stall_window": settings.stall_window,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def validate(self) -> None:
        if not self.tol > 0:
            raise InvalidOptionsError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidOptionsError(f"max_iter must be at least 1, got {self.max_iter}")
        if not self.linear_tol > 0:
            raise InvalidOptionsError(f"linear_tol must be positive, got {self.linear_tol}")
        if self.stall_window < 2:
            raise InvalidOptionsError(f"stall_window must be at least 2, got {self.stall_window}")
        if self.shift is not None and not (math.isfinite(self.shift) and self.shift > 0):
            raise InvalidOptionsError(f"shift must be a positive real, got {self.shift}")
        if self.floor is not None and not (math.isfinite(self.floor) and self.floor < 0):
            raise InvalidOptionsError(f"floor must be a negative real, got {self.floor}")


@dataclass(frozen=True)
class ReducedProblem:
    """The reduced equation Delta v = H(v0 + v) + drift with drift = 4 pi N/|V|."""

    spec: ProblemSpec
    v0: np.ndarray
    drift: float

    def with_gauge(self, constant: float) -> "ReducedProblem":
        """Same equation with v0 shifted by a constant."""
        return dataclasses.replace(self, v0=self.v0 + constant)

    def nonlinear_term(self, psi: np.ndarray) -> np.ndarray:
        """H(v0 + psi) + drift; w is clipped to 0 within rounding slack."""
        w = self.v0 + psi
        slack = 1e-12 * max(1.0, float(np.abs(self.v0).max(initial=0.0)))
        peak = float(w.max())
        if peak > slack:
            raise RegimeViolationError(
                f"Iterate left the solution regime: max(v0 + psi) = {peak:.3e}", {"max_w": peak}
            )
        return evaluate_nonlinearity(self.spec.kind, self.spec.lam, np.minimum(w, 0.0)) + self.drift


def reduce(spec: ProblemSpec, tol: Optional[float] = None) -> ReducedProblem:
    """Solve for v0 in the mean-zero gauge and set up the reduced equation."""
    source = dirac_source(spec.graph, spec.vortices)
    v0 = solve_poisson(PoissonProblem.from_function(spec.graph, source), tol)
    drift = 4.0 * math.pi * spec.vortex_count / spec.graph.volume
    return ReducedProblem(spec=spec, v0=np.array(v0.values), drift=drift)


def default_shift(kind: NonlinearityKind, lam: float) -> float:
    """K = lipschitz_bound + max(1, 0.1 lam)."""
    return lipschitz_bound(kind, lam) + max(1.0, 0.1 * lam)


@dataclass(frozen=True)
class IterationState:
    psi: np.ndarray
    n: int
    delta: float
    min_value: float


def initial_state(reduced: ReducedProblem, psi0: Optional[np.ndarray] = None) -> IterationState:
    psi = -reduced.v0 if psi0 is None else np.array(psi0, dtype=float)
    return IterationState(psi=psi, n=0, delta=math.inf, min_value=float(psi.min()))


def iterate_step(
    state: IterationState,
    reduced: ReducedProblem,
    operator: ShiftedOperator,
    tol: Optional[float] = None,
) -> IterationState:
    """One step of (Delta - K) psi_n = H(v0 + psi_{n-1}) - K psi_{n-1} + drift."""
    spec = reduced.spec
    bound = lipschitz_bound(spec.kind, spec.lam)
    if operator.shift <= bound:
        raise InvalidOptionsError(
            f"Shift K={operator.shift:g} must exceed the Lipschitz bound {bound:g} for a monotone scheme",
            {"shift": operator.shift, "bound": bound},
        )
    tol = get_settings().linear_tol if tol is None else tol
    rhs = reduced.nonlinear_term(state.psi) - operator.shift * state.psi
    psi = operator.solve(rhs, tol, x0=state.psi)
    return IterationState(
        psi=psi,
        n=state.n + 1,
        delta=float(np.abs(psi - state.psi).max()),
        min_value=float(psi.min()),
    )


def residual(spec: ProblemSpec, u: FunctionLike) -> VertexFunction:
    """Delta u - H(u) - 4 pi mult(x)/mu(x), pointwise."""
    values = as_array(spec.graph, u)
    if spec.kind is NonlinearityKind.GENERALIZED and np.any(values > 0):
        bad = spec.graph.vertices[int(np.argmax(values))]
        raise NonlinearDomainError(
            f"Generalized equation needs u <= 0; u('{bad}') = {float(values.max()):.3e}", {"vertex": bad}
        )
    counts = vortex_multiplicity(spec.graph, spec.vortices)
    dirac = 4.0 * math.pi * counts / spec.graph.mu
    values = np.asarray(values, dtype=float)
    result = spec.graph.apply_laplacian(values) - evaluate_nonlinearity(spec.kind, spec.lam, values) - dirac
    return VertexFunction(spec.graph, result)


def _reduced_gap(reduced: ReducedProblem, v: np.ndarray) -> Optional[np.ndarray]:
    """Delta v - (H(v0 + v) + drift), or None when v0 + v leaves the domain."""
    w = reduced.v0 + v
    if reduced.spec.kind is NonlinearityKind.GENERALIZED and np.any(w > 0):
        return None
    rhs = evaluate_nonlinearity(reduced.spec.kind, reduced.spec.lam, w) + reduced.drift
    return reduced.spec.graph.apply_laplacian(v) - rhs


def is_lower_solution(reduced: ReducedProblem, v: FunctionLike, atol: float = 0.0) -> bool:
    """Delta v >= H(v0 + v) + drift at every vertex."""
    gap = _reduced_gap(reduced, as_array(reduced.spec.graph, v))
    return gap is not None and bool(np.all(gap >= -atol))


def is_upper_solution(reduced: ReducedProblem, v: FunctionLike, atol: float = 0.0) -> bool:
    """Delta v <= H(v0 + v) + drift at every vertex."""
    gap = _reduced_gap(reduced, as_array(reduced.spec.graph, v))
    return gap is not None and bool(np.all(gap <= atol))


def constant_lower_solution(spec: ProblemSpec, v0: FunctionLike) -> Optional[float]:
    """Search c' > max v0 such that v_- = -c' is a lower solution.

    Since Delta(-c') = 0 the condition reads max_x H(v0(x) - c') <= -4 pi N/|V|.
    Returns the c' with the largest margin once is_lower_solution confirms it, or None.
    """
    base = np.asarray(as_array(spec.graph, v0), dtype=float)
    drift = 4.0 * math.pi * spec.vortex_count / spec.graph.volume
    top = float(base.max())
    spread = float(base.max() - base.min())

    def worst(c: float) -> float:
        return float(np.max(evaluate_nonlinearity(spec.kind, spec.lam, np.minimum(base - c, 0.0))))

    offsets = np.geomspace(1e-6, 10.0 * (spread + 1.0), 400)
    grid = top + offsets
    shifted = np.minimum(base[None, :] - grid[:, None], 0.0)
    worst_values = np.max(evaluate_nonlinearity(spec.kind, spec.lam, shifted), axis=1)
    best = int(np.argmin(worst_values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, len(grid) - 1)]
    candidate, value = float(grid[best]), float(worst_values[best])
    if right > left:
        refined = minimize_scalar(worst, bounds=(left, right), method="bounded")
        if refined.success and refined.fun < value:
            candidate, value = float(refined.x), float(refined.fun)
    if value > -drift:
        return None
    reduced = ReducedProblem(spec=spec, v0=base, drift=drift)
    if not is_lower_solution(reduced, np.full(len(base), -candidate)):
        return None
    return candidate


@dataclass
class SolveOutcome:
    status: SolveStatus
    lam: float
    kind: NonlinearityKind
    v0: np.ndarray
    solution: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    iterations: int = 0
    residual_inf: float = math.inf
    trace: List[Tuple[int, float, float]] = field(default_factory=list)
    reason: str = ""
    shift: Optional[float] = None
    monotone_violations: int = 0
    details: Dict[str, Any] = field(default_factory=dict)
    last_iterate: Optional[np.ndarray] = None

    @property
    def solved(self) -> bool:
        return self.status is SolveStatus.SOLVED


def _stalled(deltas: Sequence[float], tol: float, window: int) -> bool:
    """Step sizes above tol and never shrinking over a full window."""
    if len(deltas) < window or deltas[-1] <= tol:
        return False
    return all(later >= earlier for earlier, later in zip(deltas, list(deltas)[1:]))


def solve_at(
    spec: ProblemSpec,
    options: Optional[SolverOptions] = None,
    psi0: Optional[np.ndarray] = None,
    reduced: Optional[ReducedProblem] = None,
) -> SolveOutcome:
    """Maximal solution at one coupling, or a nonexistence / inconclusive verdict.

    ``psi0`` may replace the default start -v0 with any upper solution of the
    reduced equation (for instance the maximal solution at a larger coupling).
    """
    options = options or SolverOptions.from_settings()
    options.validate()
    reduced = reduced or reduce(spec)
    if reduced.spec is not spec:
        reduced = dataclasses.replace(reduced, spec=spec)
    v0 = reduced.v0

    bound = spec.analytic_bound
    if spec.lam <= bound:
        app_logger.info("fast reject below analytic bound", lam=spec.lam, bound=bound, kind=spec.kind.value)
        return SolveOutcome(
            status=SolveStatus.NO_SOLUTION,
            lam=spec.lam,
            kind=spec.kind,
            v0=v0,
            reason=f"below-analytic-bound: lambda <= {bound:.17g}",
        )

    shift = options.shift if options.shift is not None else default_shift(spec.kind, spec.lam)
    operator = ShiftedOperator(spec.graph, shift)
    floor = options.floor if options.floor is not None else (
        -get_settings().floor_scale * (1.0 + float(np.abs(v0).max(initial=0.0)))
    )

    if psi0 is not None:
        psi0 = np.array(as_array(spec.graph, psi0), dtype=float)
        if not is_upper_solution(reduced, psi0, atol=10.0 * options.tol):
            raise InvalidOptionsError("Warm start is not an upper solution of the reduced equation")

    state = initial_state(reduced, psi0)
    w_turn = turning_point(spec.kind)
    total_charge = 4.0 * math.pi * spec.vortex_count
    trace: List[Tuple[int, float, float]] = []
    deltas: deque = deque(maxlen=options.stall_window)
    violations = 0
    residual_inf = math.inf

    def finish(status: SolveStatus, reason: str) -> SolveOutcome:
        solved = status is SolveStatus.SOLVED
        outcome = SolveOutcome(
            status=status,
            lam=spec.lam,
            kind=spec.kind,
            v0=v0,
            solution=state.psi if solved else None,
            u=(v0 + state.psi) if solved else None,
            iterations=state.n,
            residual_inf=residual_inf,
            trace=trace,
            reason=reason,
            shift=shift,
            monotone_violations=violations,
            last_iterate=None if solved else state.psi,
        )
        app_logger.info(
            "solve finished",
            status=status.value,
            lam=spec.lam,
            kind=spec.kind.value,
            iterations=state.n,
            residual=residual_inf,
            reason=reason,
        )
        return outcome

    app_logger.debug("solve started", lam=spec.lam, kind=spec.kind.value, shift=shift, vertices=len(spec.graph))
    for _ in range(options.max_iter):
        try:
            following = iterate_step(state, reduced, operator, options.linear_tol)
        except RegimeViolationError as exc:
            return finish(SolveStatus.INCONCLUSIVE, f"regime-violation: {exc.message}")
        except LinearSolverError as exc:
            return finish(SolveStatus.INCONCLUSIVE, f"linear-solver: {exc.message}")

        rise = float((following.psi - state.psi).max())
        scale = max(1.0, float(np.abs(state.psi).max()))
        slack = _CHAIN_SLACK * scale
        if operator.method == "jacobi-cg":
            # iterative solves are only accurate to linear_tol relative to the rhs
            slack = max(slack, 10.0 * options.linear_tol * shift * scale)
        if rise > slack:
            if violations == 0:
                app_logger.warning("monotone chain violated", step=following.n, rise=rise)
            violations += 1

        state = following
        trace.append((state.n, state.delta, state.min_value))
        deltas.append(state.delta)

        if state.min_value < floor:
            return finish(SolveStatus.NO_SOLUTION, f"divergence-floor: min psi below {floor:.6g}")

        w = v0 + state.psi
        peak = float(w.max())
        if peak <= w_turn:
            # Every solution lies below psi_n, where H decreases; integrating the
            # equation forces int H = -4 pi N, which is then out of reach.
            integral = spec.graph.integrate_array(evaluate_nonlinearity(spec.kind, spec.lam, w))
            if integral + total_charge > _CERTIFICATE_MARGIN * total_charge:
                return finish(SolveStatus.NO_SOLUTION, "integral-certificate")

        if state.delta <= options.tol and peak < 0.0:
            residual_inf = float(np.abs(residual(spec, w).values).max())
            if residual_inf <= options.tol:
                return finish(SolveStatus.SOLVED, "converged")
            if state.delta == 0.0:
                return finish(SolveStatus.INCONCLUSIVE, "stagnated: fixed point above residual tolerance")

    if _stalled(list(deltas), options.tol, options.stall_window):
        return finish(SolveStatus.NO_SOLUTION, "divergence-stall: step sizes not shrinking at max_iter")
    return finish(SolveStatus.INCONCLUSIVE, "max-iter: still converging")
