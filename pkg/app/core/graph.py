"""
Finite weighted graphs with a vertex measure, and their discrete calculus:
the mu-Laplacian, the gradient form, integration against the measure and the
W^{1,2} norm.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import structlog
from scipy.sparse.csgraph import breadth_first_order
from scipy.sparse.linalg import eigsh

from app.core.config import get_settings
from app.core.exceptions import (
    DisconnectedGraphError,
    DomainMismatchError,
    GraphValidationError,
    InvalidOptionsError,
)

app_logger = structlog.get_logger(__name__)

Edge = Tuple[str, str, float]


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class WeightedGraph:
    """Connected graph with symmetric positive edge weights and a positive vertex measure.

    Vertices are string identifiers indexed densely in insertion order. The
    Laplacian is assembled once as a sparse operator and shared by every solve.
    Instances are immutable.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Iterable[Edge],
        measure: Optional[Mapping[str, float]] = None,
    ):
        if len(vertices) == 0:
            raise GraphValidationError("A graph needs at least one vertex")

        index: Dict[str, int] = {}
        for position, vertex in enumerate(vertices):
            if not isinstance(vertex, str):
                raise GraphValidationError(
                    f"Vertex #{position} has a non-string identifier: {vertex!r}",
                    {"entry": position},
                )
            if vertex in index:
                raise GraphValidationError(
                    f"Vertex '{vertex}' is listed twice", {"entry": position, "vertex": vertex}
                )
            index[vertex] = position
        self._vertices: Tuple[str, ...] = tuple(vertices)
        self._index = index
        n = len(self._vertices)

        measure = measure or {}
        unknown = [v for v in measure if v not in index]
        if unknown:
            raise GraphValidationError(f"Measure given for unknown vertex '{unknown[0]}'", {"vertex": unknown[0]})
        mu = np.array([float(measure.get(v, 1.0)) for v in self._vertices])
        for vertex, value in zip(self._vertices, mu):
            if not math.isfinite(value) or value <= 0.0:
                raise GraphValidationError(
                    f"Measure of vertex '{vertex}' must be a positive real, got {value}",
                    {"vertex": vertex},
                )

        heads: List[int] = []
        tails: List[int] = []
        weights: List[float] = []
        kept: List[Edge] = []
        seen = set()
        for position, edge in enumerate(edges):
            x, y, w = edge
            if x not in index or y not in index:
                missing = x if x not in index else y
                raise GraphValidationError(
                    f"Edge #{position} ({x}, {y}) references unknown vertex '{missing}'",
                    {"entry": position, "vertex": missing},
                )
            if x == y:
                raise GraphValidationError(
                    f"Edge #{position} ({x}, {y}) is a self-loop", {"entry": position}
                )
            key = frozenset((x, y))
            if key in seen:
                raise GraphValidationError(
                    f"Edge #{position} ({x}, {y}) duplicates an earlier edge", {"entry": position}
                )
            w = float(w)
            if not math.isfinite(w) or w <= 0.0:
                raise GraphValidationError(
                    f"Edge #{position} ({x}, {y}) must have a positive weight, got {w}",
                    {"entry": position},
                )
            seen.add(key)
            heads.append(index[x])
            tails.append(index[y])
            weights.append(w)
            kept.append((x, y, w))

        self._edges: Tuple[Edge, ...] = tuple(kept)
        self._heads = _freeze(np.array(heads, dtype=np.int64))
        self._tails = _freeze(np.array(tails, dtype=np.int64))
        self._weights = _freeze(np.array(weights, dtype=float))
        self._mu = _freeze(mu)

        rows = np.concatenate([self._heads, self._tails])
        cols = np.concatenate([self._tails, self._heads])
        data = np.concatenate([self._weights, self._weights])
        adjacency = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        degree = np.asarray(adjacency.sum(axis=1)).ravel()

        # Connectivity by traversal from the first vertex
        if n > 1:
            reached = breadth_first_order(adjacency, 0, directed=False, return_predecessors=False)
            if len(reached) != n:
                reached_set = set(int(i) for i in reached)
                stranded = next(self._vertices[i] for i in range(n) if i not in reached_set)
                raise DisconnectedGraphError(
                    f"Graph is disconnected: vertex '{stranded}' is unreachable from '{self._vertices[0]}'",
                    {"vertex": stranded},
                )

        self._adjacency = adjacency
        self._degree = _freeze(degree)
        # S = D - W is the symmetric stiffness; Delta = -M^{-1} S
        self._stiffness = (sp.diags(degree) - adjacency).tocsr()
        self._laplacian = (sp.diags(1.0 / mu) @ (adjacency - sp.diags(degree))).tocsr()
        self._volume = float(mu.sum())
        self._fingerprint: Optional[str] = None

    # ------------------------------------------------------------------ access

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def volume(self) -> float:
        """Total measure |V| = sum of mu(x)."""
        return self._volume

    @property
    def degree(self) -> np.ndarray:
        return self._degree

    @property
    def laplacian_matrix(self) -> sp.csr_matrix:
        return self._laplacian

    @property
    def stiffness_matrix(self) -> sp.csr_matrix:
        return self._stiffness

    @property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._heads, self._tails, self._weights

    def __len__(self) -> int:
        return len(self._vertices)

    def __iter__(self) -> Iterator[str]:
        return iter(self._vertices)

    def __contains__(self, vertex: object) -> bool:
        return vertex in self._index

    def index_of(self, vertex: str) -> int:
        return self._index[vertex]

    def measure_of(self, vertex: str) -> float:
        return float(self._mu[self._index[vertex]])

    @property
    def fingerprint(self) -> str:
        """SHA-256 over a canonical rendering of vertices, measure and edges."""
        if self._fingerprint is None:
            canonical = {
                "vertices": [[v, repr(float(m))] for v, m in zip(self._vertices, self._mu)],
                "edges": [[x, y, repr(w)] for x, y, w in self._edges],
            }
            payload = json.dumps(canonical, separators=(",", ":"), ensure_ascii=False)
            self._fingerprint = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return self._fingerprint

    def same_as(self, other: "WeightedGraph") -> bool:
        return other is self or other.fingerprint == self.fingerprint

    # ------------------------------------------------------------- array kernels

    def apply_laplacian(self, values: np.ndarray) -> np.ndarray:
        return self._laplacian @ values

    def integrate_array(self, values: np.ndarray) -> float:
        return float(self._mu @ values)

    def gradient_form_array(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        heads, tails, weights = self.edge_arrays
        contribution = weights * (u[tails] - u[heads]) * (v[tails] - v[heads])
        n = len(self._vertices)
        total = np.bincount(heads, weights=contribution, minlength=n)
        total += np.bincount(tails, weights=contribution, minlength=n)
        return total / (2.0 * self._mu)

    def __repr__(self) -> str:
        return f"WeightedGraph(vertices={len(self._vertices)}, edges={len(self._edges)}, volume={self._volume:g})"


class VertexFunction:
    """A finite real value at every vertex of one graph."""

    __slots__ = ("graph", "values")

    def __init__(self, graph: WeightedGraph, values: Union[Sequence[float], np.ndarray]):
        array = np.array(values, dtype=float)
        if array.shape != (len(graph),):
            raise DomainMismatchError(
                f"Expected {len(graph)} vertex values, got shape {array.shape}"
            )
        if not np.all(np.isfinite(array)):
            bad = graph.vertices[int(np.flatnonzero(~np.isfinite(array))[0])]
            raise DomainMismatchError(f"Value at vertex '{bad}' is not finite", {"vertex": bad})
        self.graph = graph
        self.values = _freeze(array)

    @classmethod
    def from_mapping(cls, graph: WeightedGraph, mapping: Mapping[str, float]) -> "VertexFunction":
        missing = [v for v in graph.vertices if v not in mapping]
        extra = [v for v in mapping if v not in graph]
        if missing or extra:
            raise DomainMismatchError(
                "Vertex function domain differs from the graph",
                {"missing": missing, "unknown": extra},
            )
        return cls(graph, [float(mapping[v]) for v in graph.vertices])

    @classmethod
    def constant(cls, graph: WeightedGraph, value: float) -> "VertexFunction":
        return cls(graph, np.full(len(graph), float(value)))

    def to_dict(self) -> Dict[str, float]:
        return {v: float(x) for v, x in zip(self.graph.vertices, self.values)}

    def __getitem__(self, vertex: str) -> float:
        return float(self.values[self.graph.index_of(vertex)])

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"VertexFunction({self.to_dict()})"


FunctionLike = Union[VertexFunction, Sequence[float], np.ndarray]


def as_array(graph: WeightedGraph, u: FunctionLike) -> np.ndarray:
    """Values of u in the graph's vertex order, after a domain check."""
    if isinstance(u, VertexFunction):
        if not graph.same_as(u.graph):
            raise DomainMismatchError("Vertex function belongs to a different graph")
        return u.values
    array = np.asarray(u, dtype=float)
    if array.shape != (len(graph),):
        raise DomainMismatchError(f"Expected {len(graph)} vertex values, got shape {array.shape}")
    return array


def laplacian(graph: WeightedGraph, u: FunctionLike) -> VertexFunction:
    """mu-Laplacian: (1/mu(x)) sum_{y~x} w_xy (u(y) - u(x))."""
    return VertexFunction(graph, graph.apply_laplacian(as_array(graph, u)))


def gradient_form(graph: WeightedGraph, u: FunctionLike, v: FunctionLike) -> VertexFunction:
    """Gamma(u, v)(x) = (1/(2 mu(x))) sum_{y~x} w_xy (u(y)-u(x)) (v(y)-v(x))."""
    return VertexFunction(graph, graph.gradient_form_array(as_array(graph, u), as_array(graph, v)))


def integrate(graph: WeightedGraph, u: FunctionLike) -> float:
    """Integral over V against mu."""
    return graph.integrate_array(as_array(graph, u))


def sobolev_norm(graph: WeightedGraph, u: FunctionLike) -> float:
    """W^{1,2} norm (integral of |grad u|^2 + u^2)^(1/2)."""
    values = as_array(graph, u)
    energy = graph.integrate_array(graph.gradient_form_array(values, values) + values * values)
    return math.sqrt(max(energy, 0.0))


@dataclass(frozen=True)
class MaxPrincipleVerdict:
    premise_holds: bool
    conclusion_holds: bool
    min_premise: float
    max_value: float

    @property
    def status(self) -> str:
        if not self.premise_holds:
            return "premise-violated"
        return "holds" if self.conclusion_holds else "counterexample"


def check_max_principle(
    graph: WeightedGraph, u: FunctionLike, K: float, atol: float = 0.0
) -> MaxPrincipleVerdict:
    """Test oracle: if Delta u - K u >= 0 everywhere then u <= 0 everywhere."""
    if not K > 0:
        raise InvalidOptionsError(f"Max-principle shift must be positive, got {K}")
    values = as_array(graph, u)
    premise = graph.apply_laplacian(values) - K * values
    min_premise = float(premise.min())
    max_value = float(values.max())
    return MaxPrincipleVerdict(
        premise_holds=min_premise >= -atol,
        conclusion_holds=max_value <= atol,
        min_premise=min_premise,
        max_value=max_value,
    )


def estimate_poincare_constant(graph: WeightedGraph) -> float:
    """Smallest C with int u^2 <= C int |grad u|^2 for mean-zero u.

    C is the reciprocal of the spectral gap of the pencil (S, M), S the
    stiffness matrix and M = diag(mu).
    """
    n = len(graph)
    if n < 2:
        raise GraphValidationError("The Poincare constant needs at least two vertices")

    settings = get_settings()
    if n <= settings.dense_threshold or n <= 4:
        eigenvalues = scipy.linalg.eigh(
            graph.stiffness_matrix.toarray(), np.diag(graph.mu), eigvals_only=True
        )
    else:
        # Shift-invert around -1 keeps S + M positive definite
        eigenvalues = eigsh(
            graph.stiffness_matrix.tocsc(),
            k=3,
            M=sp.diags(graph.mu).tocsc(),
            sigma=-1.0,
            which="LM",
            return_eigenvectors=False,
        )
    eigenvalues = np.sort(np.asarray(eigenvalues))
    scale = max(float(np.abs(eigenvalues).max()), 1.0)
    zero_count = int(np.sum(np.abs(eigenvalues) <= 1e-10 * scale))
    if zero_count > 1:
        raise DisconnectedGraphError(
            f"Laplacian kernel has dimension {zero_count}; the graph is disconnected"
        )
    gap = float(eigenvalues[1])
    app_logger.debug("poincare constant estimated", vertices=n, spectral_gap=gap)
    return 1.0 / gap
