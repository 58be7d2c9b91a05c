import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.config import get_settings
from app.core.exceptions import (
    IncompatibleSourceError,
    InvalidOptionsError,
    LinearSolverError,
    UnknownVortexError,
)
from app.core.graph import WeightedGraph, integrate, laplacian
from app.core.linear_solver import (
    PoissonProblem,
    ShiftedOperator,
    dirac_source,
    solve_poisson,
    solve_shifted,
    vortex_multiplicity,
)
from app.services.generator_service import generate
from tests.conftest import connected_graphs


def test_poisson_with_one_vortex_on_k3(k3):
    v0 = solve_poisson(PoissonProblem.from_function(k3, dirac_source(k3, ["a"])))
    expected = [-8.0 * math.pi / 9.0, 4.0 * math.pi / 9.0, 4.0 * math.pi / 9.0]
    assert np.allclose(v0.values, expected, atol=1e-12)
    assert abs(integrate(k3, v0)) <= 1e-12
    # off the vortex the equation reads Delta v0 = -4 pi N/|V|
    assert laplacian(k3, v0)["b"] == pytest.approx(-4.0 * math.pi / 3.0)


def test_dirac_source_integrates_to_zero(random12):
    source = dirac_source(random12, ["0", "5", "5"])
    assert abs(integrate(random12, source)) <= 1e-12
    assert vortex_multiplicity(random12, ["0", "5", "5"])[random12.index_of("5")] == 2


def test_unknown_vortex_is_named(k3):
    with pytest.raises(UnknownVortexError, match="'z'"):
        dirac_source(k3, ["a", "z"])


def test_incompatible_source_is_rejected(k3):
    with pytest.raises(IncompatibleSourceError):
        solve_poisson(PoissonProblem.from_function(k3, [1.0, 0.0, 0.0]))


def test_zero_source_gives_zero(k3):
    assert np.all(solve_poisson(PoissonProblem.from_function(k3, [0.0, 0.0, 0.0])).values == 0.0)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_poisson_residual_and_gauge(data):
    graph = data.draw(connected_graphs(max_vertices=20))
    n = len(graph)
    raw = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))
    source = raw - integrate(graph, raw) / graph.volume
    v0 = solve_poisson(PoissonProblem.from_function(graph, source))
    scale = max(1.0, float(np.abs(source).max()))
    assert np.abs(laplacian(graph, v0).values - source).max() <= 1e-9 * scale
    assert abs(integrate(graph, v0)) <= 1e-9 * scale * graph.volume


def test_poisson_iterative_path_on_large_torus():
    graph = generate("torus", [16, 16])
    source = dirac_source(graph, ["0_0", "8_8"])
    v0 = solve_poisson(PoissonProblem.from_function(graph, source))
    residual = np.abs(laplacian(graph, v0).values - source.values).max()
    assert residual <= 1e-9
    assert abs(integrate(graph, v0)) <= 1e-9
    # symmetric placement of the two vortices
    assert v0["0_0"] == pytest.approx(v0["8_8"], abs=1e-9)


def test_shifted_solve_residual(random12):
    operator = ShiftedOperator(random12, 5.0)
    b = np.linspace(-3.0, 2.0, len(random12))
    psi = solve_shifted(operator, b, tol=1e-13)
    assert operator.method == "dense-cholesky"
    assert np.abs(operator.apply(psi.values) - b).max() <= 1e-10


def test_shifted_dense_and_iterative_agree(random12):
    b = np.cos(np.arange(len(random12)))
    dense = ShiftedOperator(random12, 2.5)
    iterative = ShiftedOperator(random12, 2.5, dense_threshold=0)
    assert iterative.method == "jacobi-cg"
    assert np.allclose(
        solve_shifted(dense, b, tol=1e-13).values, solve_shifted(iterative, b, tol=1e-13).values, atol=1e-10
    )


def test_iterative_solve_ignores_warm_start_when_rhs_vanishes(k3):
    operator = ShiftedOperator(k3, 3.0, dense_threshold=0)
    psi = operator.solve(np.zeros(3), 1e-13, x0=np.ones(3))
    assert np.abs(psi).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_shifted_solve_preserves_sign(data):
    graph = data.draw(connected_graphs(max_vertices=15))
    n = len(graph)
    b = np.array(data.draw(st.lists(st.floats(0.0, 5.0), min_size=n, max_size=n)))
    shift = data.draw(st.floats(min_value=0.1, max_value=50.0))
    psi = solve_shifted(ShiftedOperator(graph, shift), b, tol=1e-13)
    # (Delta - K) psi = b >= 0 forces psi <= 0
    assert psi.values.max() <= 1e-10 * max(1.0, float(np.abs(psi.values).max()))


def test_shift_must_be_positive(k3):
    with pytest.raises(InvalidOptionsError):
        ShiftedOperator(k3, 0.0)


@pytest.fixture
def starved_cg(monkeypatch):
    monkeypatch.setenv("CSH_CG_MAX_ITER", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_poisson_on_p2(p2):
    v0 = solve_poisson(PoissonProblem.from_function(p2, [1.0, -1.0]))
    assert np.allclose(v0.values, [-0.5, 0.5], atol=1e-12)


def test_shifted_solve_on_p2(p2):
    psi = solve_shifted(ShiftedOperator(p2, 1.0), [1.0, 0.0], tol=1e-13)
    assert np.allclose(psi.values, [-2.0 / 3.0, -1.0 / 3.0], atol=1e-12)


def test_dirac_source_on_weighted_p2():
    graph = WeightedGraph(["a", "b"], [("a", "b", 1.0)], {"a": 2.0, "b": 2.0})
    assert np.allclose(dirac_source(graph, ["a"]).values, [math.pi, -math.pi], atol=1e-12)


@pytest.mark.parametrize("dense_threshold", [None, 0], ids=["dense", "cg"])
def test_shifted_solve_inverts_apply(random12, dense_threshold):
    operator = ShiftedOperator(random12, 3.0, dense_threshold=dense_threshold)
    psi = -np.exp(np.sin(np.arange(len(random12), dtype=float)))
    recovered = operator.solve(operator.apply(psi), 1e-13)
    assert np.abs(recovered - psi).max() <= 1e-10 * np.abs(psi).max()


def test_shifted_cg_failure_raises(torus44, starved_cg):
    operator = ShiftedOperator(torus44, 2.0, dense_threshold=0)
    b = np.sin(np.arange(len(torus44), dtype=float))
    with pytest.raises(LinearSolverError) as info:
        operator.solve(b, 1e-13)
    assert info.value.error_code == "linear_solver_failed"
    assert info.value.details["max_iter"] == 1


def test_poisson_cg_failure_raises(starved_cg, monkeypatch):
    monkeypatch.setenv("CSH_DENSE_THRESHOLD", "0")
    get_settings.cache_clear()
    graph = generate("torus", [6, 6])
    with pytest.raises(LinearSolverError, match="poisson"):
        solve_poisson(PoissonProblem.from_function(graph, dirac_source(graph, ["0_0"])))
