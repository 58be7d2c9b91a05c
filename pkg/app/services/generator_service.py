"""
Generator Service - named graph families

Families: path(n), cycle(n), complete(n), torus(a, b) with 4-neighbour
wraparound, random(n, p) resampled until connected. Unit weights and measure
unless randomisation in [0.5, 2] is requested; all randomness flows from one
seed so identical arguments give identical graphs.
"""

from typing import Callable, Dict, List, Optional, Sequence

import networkx as nx
import numpy as np
import structlog

from app.core.exceptions import InvalidOptionsError
from app.core.graph import WeightedGraph

app_logger = structlog.get_logger(__name__)

RANDOM_LOW = 0.5
RANDOM_HIGH = 2.0
MAX_CONNECT_ATTEMPTS = 1000


def _count(value: float, name: str, minimum: int) -> int:
    if float(value) != int(value) or int(value) < minimum:
        raise InvalidOptionsError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def _expect(params: Sequence[float], count: int, family: str) -> None:
    if len(params) != count:
        raise InvalidOptionsError(f"{family} takes {count} parameter(s), got {len(params)}")


def _path(params: Sequence[float], seed: Optional[int]) -> nx.Graph:
    _expect(params, 1, "path")
    return nx.path_graph(_count(params[0], "n", 1))


def _cycle(params: Sequence[float], seed: Optional[int]) -> nx.Graph:
    _expect(params, 1, "cycle")
    return nx.cycle_graph(_count(params[0], "n", 3))


def _complete(params: Sequence[float], seed: Optional[int]) -> nx.Graph:
    _expect(params, 1, "complete")
    return nx.complete_graph(_count(params[0], "n", 1))


def _torus(params: Sequence[float], seed: Optional[int]) -> nx.Graph:
    _expect(params, 2, "torus")
    # sides of 3 or more keep the wraparound lattice free of parallel edges
    a = _count(params[0], "a", 3)
    b = _count(params[1], "b", 3)
    lattice = nx.grid_2d_graph(a, b, periodic=True)
    return nx.relabel_nodes(lattice, {node: f"{node[0]}_{node[1]}" for node in lattice.nodes})


def _random(params: Sequence[float], seed: Optional[int]) -> nx.Graph:
    _expect(params, 2, "random")
    n = _count(params[0], "n", 1)
    p = float(params[1])
    if not 0.0 < p <= 1.0:
        raise InvalidOptionsError(f"edge probability must lie in (0, 1], got {p}")
    base = 0 if seed is None else seed
    for attempt in range(MAX_CONNECT_ATTEMPTS):
        candidate = nx.gnp_random_graph(n, p, seed=base + attempt)
        if nx.is_connected(candidate):
            app_logger.debug("random graph accepted", n=n, p=p, attempts=attempt + 1)
            return candidate
    raise InvalidOptionsError(
        f"No connected G({n}, {p}) sample in {MAX_CONNECT_ATTEMPTS} attempts; raise p",
        {"n": n, "p": p},
    )


FAMILIES: Dict[str, Callable[[Sequence[float], Optional[int]], nx.Graph]] = {
    "path": _path,
    "cycle": _cycle,
    "complete": _complete,
    "torus": _torus,
    "random": _random,
}


def to_weighted_graph(
    graph: nx.Graph,
    seed: Optional[int] = None,
    random_weights: bool = False,
    random_measure: bool = False,
) -> WeightedGraph:
    """Convert with string ids in node order; random values drawn from one seeded stream."""
    rng = np.random.default_rng(seed)
    nodes = list(graph.nodes)
    names = {node: str(node) for node in nodes}
    edges: List = list(graph.edges)
    weights = rng.uniform(RANDOM_LOW, RANDOM_HIGH, len(edges)) if random_weights else np.ones(len(edges))
    measure = rng.uniform(RANDOM_LOW, RANDOM_HIGH, len(nodes)) if random_measure else np.ones(len(nodes))
    return WeightedGraph(
        vertices=[names[node] for node in nodes],
        edges=[(names[x], names[y], float(w)) for (x, y), w in zip(edges, weights)],
        measure={names[node]: float(m) for node, m in zip(nodes, measure)},
    )


def generate(
    family: str,
    params: Sequence[float],
    seed: Optional[int] = None,
    random_weights: bool = False,
    random_measure: bool = False,
) -> WeightedGraph:
    if family not in FAMILIES:
        raise InvalidOptionsError(f"Unknown graph family '{family}'", {"family": family})
    topology = FAMILIES[family](params, seed)
    graph = to_weighted_graph(topology, seed, random_weights, random_measure)
    app_logger.info("graph generated", family=family, vertices=len(graph), edges=len(graph.edges))
    return graph
