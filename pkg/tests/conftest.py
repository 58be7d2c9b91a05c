"""
Shared fixtures: the three-vertex complete graph with vertices a, b, c, small
families, and a hypothesis strategy for random connected weighted graphs.
"""

import json

import hypothesis.strategies as st
import pytest

from app.core.graph import WeightedGraph
from app.core.logging_config import configure_logging
from app.services.generator_service import generate


@pytest.fixture(autouse=True)
def quiet_logging():
    # rebinds the stream each test; capsys swaps sys.stderr underneath
    configure_logging("warning")


def make_k3() -> WeightedGraph:
    return WeightedGraph(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)])


@pytest.fixture
def k3() -> WeightedGraph:
    return make_k3()


@pytest.fixture
def p2() -> WeightedGraph:
    return WeightedGraph(["x", "y"], [("x", "y", 1.0)])


@pytest.fixture
def torus44() -> WeightedGraph:
    return generate("torus", [4, 4])


@pytest.fixture
def random12() -> WeightedGraph:
    return generate("random", [12, 0.4], seed=0)


@pytest.fixture
def k3_file(tmp_path):
    path = tmp_path / "k3.json"
    path.write_text(
        json.dumps(
            {
                "vertices": [{"id": "a", "mu": 1}, {"id": "b", "mu": 1}, {"id": "c", "mu": 1}],
                "edges": [{"u": "a", "v": "b", "w": 1}, {"u": "b", "v": "c", "w": 1}, {"u": "a", "v": "c", "w": 1}],
            }
        ),
        encoding="utf-8",
    )
    return path


positive = st.floats(min_value=0.1, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def connected_graphs(draw, min_vertices=2, max_vertices=12):
    """Random spanning tree plus random extra edges, random weights and measure."""
    n = draw(st.integers(min_value=min_vertices, max_value=max_vertices))
    vertices = [f"v{i}" for i in range(n)]
    pairs = set()
    for i in range(1, n):
        parent = draw(st.integers(min_value=0, max_value=i - 1))
        pairs.add((parent, i))
    candidates = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in pairs]
    if candidates:
        extra = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=min(len(candidates), 2 * n)))
        pairs.update(extra)
    edges = [(vertices[i], vertices[j], draw(positive)) for i, j in sorted(pairs)]
    measure = {v: draw(positive) for v in vertices}
    return WeightedGraph(vertices, edges, measure)


def vertex_values(n, bound=10.0):
    return st.lists(
        st.floats(min_value=-bound, max_value=bound, allow_nan=False, allow_infinity=False),
        min_size=n,
        max_size=n,
    )
