"""
Linear problems of the monotone scheme: the singular Poisson problem with Dirac
data (solved in the mean-zero gauge) and the shifted problem (Delta - K) psi = b.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import structlog
from scipy.sparse.linalg import LinearOperator, cg

from app.core.config import get_settings
from app.core.exceptions import (
    IncompatibleSourceError,
    InvalidOptionsError,
    LinearSolverError,
    UnknownVortexError,
)
from app.core.graph import FunctionLike, VertexFunction, WeightedGraph, as_array

app_logger = structlog.get_logger(__name__)

_COMPATIBILITY_RTOL = 1e-10


def vortex_multiplicity(graph: WeightedGraph, vortices: Sequence[str]) -> np.ndarray:
    """Number of times each vertex appears in the vortex list."""
    counts = np.zeros(len(graph))
    for vertex, multiplicity in Counter(vortices).items():
        if vertex not in graph:
            raise UnknownVortexError(f"Vortex '{vertex}' is not a vertex of the graph", {"vertex": vertex})
        counts[graph.index_of(vertex)] = multiplicity
    return counts


def dirac_source(graph: WeightedGraph, vortices: Sequence[str]) -> VertexFunction:
    """s(x) = -4 pi N/|V| + 4 pi mult(x)/mu(x); integrates to zero."""
    if len(vortices) == 0:
        raise UnknownVortexError("At least one vortex is required")
    counts = vortex_multiplicity(graph, vortices)
    source = -4.0 * math.pi * len(vortices) / graph.volume + 4.0 * math.pi * counts / graph.mu
    return VertexFunction(graph, source)


@dataclass(frozen=True)
class PoissonProblem:
    """Delta v0 = source with int source dmu = 0; solution normalised to mean zero."""

    graph: WeightedGraph
    source: np.ndarray

    @classmethod
    def from_function(cls, graph: WeightedGraph, source: FunctionLike) -> "PoissonProblem":
        return cls(graph, np.array(as_array(graph, source), dtype=float))

    def check_compatibility(self) -> None:
        total = self.graph.integrate_array(self.source)
        scale = self.graph.integrate_array(np.abs(self.source))
        if abs(total) > _COMPATIBILITY_RTOL * scale:
            raise IncompatibleSourceError(
                f"Poisson source integrates to {total:.3e}; it must integrate to zero",
                {"integral": total},
            )


def _mean_zero(graph: WeightedGraph) -> Callable[[np.ndarray], np.ndarray]:
    mu, volume = graph.mu, graph.volume

    def project(values: np.ndarray) -> np.ndarray:
        return values - (mu @ values) / volume

    return project


def _jacobi(diagonal: np.ndarray) -> sp.dia_matrix:
    return sp.diags(1.0 / diagonal)


def _conjugate_gradient(
    system,
    rhs: np.ndarray,
    preconditioner: sp.dia_matrix,
    tol: float,
    atol: float,
    max_iter: int,
    x0: Optional[np.ndarray] = None,
    what: str = "linear",
) -> np.ndarray:
    """scipy CG; a non-converged or broken-down run raises LinearSolverError."""
    solution, info = cg(system, rhs, x0=x0, rtol=tol, atol=atol, maxiter=max_iter, M=preconditioner)
    if info != 0:
        reason = "did not converge" if info > 0 else "broke down"
        raise LinearSolverError(
            f"{what} CG {reason} (info={info}, max_iter={max_iter})",
            {"info": int(info), "max_iter": max_iter},
        )
    return solution


def solve_poisson(problem: PoissonProblem, tol: Optional[float] = None) -> VertexFunction:
    """Mean-zero solution of Delta v0 = source on a connected graph."""
    settings = get_settings()
    tol = settings.poisson_tol if tol is None else tol
    problem.check_compatibility()
    graph = problem.graph
    source = problem.source
    project = _mean_zero(graph)
    n = len(graph)

    if n == 1 or not np.any(source):
        return VertexFunction.constant(graph, 0.0)

    # S v = -M s restricted to mean-zero v; the rank-one term makes the matrix definite
    mu, volume = graph.mu, graph.volume
    stiffness = graph.stiffness_matrix
    rhs = -mu * source
    if n <= settings.dense_threshold:
        matrix = stiffness.toarray() + np.outer(mu, mu) / volume
        factor = scipy.linalg.cho_factor(matrix)
        solution = project(scipy.linalg.cho_solve(factor, rhs))
    else:
        def matvec(values: np.ndarray) -> np.ndarray:
            flat = np.ravel(values)
            return stiffness @ flat + mu * (mu @ flat) / volume

        system = LinearOperator((n, n), matvec=matvec, dtype=float)
        preconditioner = _jacobi(stiffness.diagonal() + mu * mu / volume)
        solution = project(
            _conjugate_gradient(system, rhs, preconditioner, tol, 0.0, settings.cg_max_iter, what="poisson")
        )

    residual = float(np.abs(graph.apply_laplacian(solution) - source).max())
    if residual > tol * float(np.abs(source).max()):
        app_logger.warning("poisson residual above tolerance", residual=residual, tol=tol)
    return VertexFunction(graph, solution)


class ShiftedOperator:
    """(Delta - K) on one graph with its factorisation built once at construction.

    Solved as the symmetric positive definite system (S + K M) psi = -M b.
    Small graphs use a dense Cholesky factor; larger ones Jacobi-preconditioned
    CG. Read-only after construction.
    """

    def __init__(self, graph: WeightedGraph, shift: float, dense_threshold: Optional[int] = None):
        if not (shift > 0 and math.isfinite(shift)):
            raise InvalidOptionsError(f"Shift K must be a positive real, got {shift}")
        settings = get_settings()
        self.graph = graph
        self.shift = float(shift)
        threshold = settings.dense_threshold if dense_threshold is None else dense_threshold
        self._cg_max_iter = settings.cg_max_iter

        system = (graph.stiffness_matrix + self.shift * sp.diags(graph.mu)).tocsr()
        if len(graph) <= threshold:
            self.method = "dense-cholesky"
            self._factor = scipy.linalg.cho_factor(system.toarray())
            self._system = None
            self._preconditioner = None
        else:
            self.method = "jacobi-cg"
            self._factor = None
            self._system = system
            self._preconditioner = _jacobi(system.diagonal())
        app_logger.debug("shifted operator factorised", method=self.method, shift=self.shift, vertices=len(graph))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """(Delta - K) psi."""
        return self.graph.apply_laplacian(psi) - self.shift * psi

    def solve(self, b: np.ndarray, tol: float, x0: Optional[np.ndarray] = None) -> np.ndarray:
        """psi with (S + K M) psi = -M b; CG stops at tol relative to max(||M b||, ||mu||)."""
        rhs = -self.graph.mu * b
        if self._factor is not None:
            return scipy.linalg.cho_solve(self._factor, rhs)
        atol = tol * float(np.linalg.norm(self.graph.mu))
        return _conjugate_gradient(
            self._system, rhs, self._preconditioner, tol, atol, self._cg_max_iter, x0=x0, what="shifted"
        )


def solve_shifted(operator: ShiftedOperator, b: FunctionLike, tol: Optional[float] = None) -> VertexFunction:
    """Solve (Delta - K) psi = b."""
    tol = get_settings().linear_tol if tol is None else tol
    values = as_array(operator.graph, b)
    return VertexFunction(operator.graph, operator.solve(values, tol))
