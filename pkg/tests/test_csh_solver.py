import math

import networkx as nx
import numpy as np
import pytest

from app.core.csh_solver import (
    IterationState,
    ProblemSpec,
    SolverOptions,
    SolveStatus,
    constant_lower_solution,
    default_shift,
    initial_state,
    is_lower_solution,
    is_upper_solution,
    iterate_step,
    reduce,
    residual,
    solve_at,
)
from app.core.diagnostics import diagnostics, envelope_exponents
from app.core.exceptions import (
    InvalidOptionsError,
    InvalidProblemError,
    LinearSolverError,
    NonlinearDomainError,
    RegimeViolationError,
    UnknownVortexError,
)
from app.core.graph import VertexFunction
from app.core.linear_solver import ShiftedOperator
from app.core.nonlinear import NonlinearityKind, analytic_lambda_bound, evaluate_nonlinearity
from app.services.generator_service import to_weighted_graph
from tests.oracles import newton, newton_roots

GEN = NonlinearityKind.GENERALIZED
STD = NonlinearityKind.STANDARD


def spec_for(graph, kind, lam, vortices=("a",)):
    return ProblemSpec(graph=graph, kind=kind, lam=lam, vortices=tuple(vortices))


def assert_solved(outcome, tol=1e-8):
    assert outcome.status is SolveStatus.SOLVED, outcome.reason
    assert outcome.residual_inf <= tol
    assert np.all(outcome.u < 0.0)
    assert outcome.monotone_violations == 0


def test_problem_spec_validation(k3):
    with pytest.raises(InvalidProblemError):
        spec_for(k3, GEN, 0.0)
    with pytest.raises(InvalidProblemError):
        spec_for(k3, GEN, float("inf"))
    with pytest.raises(InvalidProblemError):
        spec_for(k3, GEN, 10.0, vortices=())
    with pytest.raises(UnknownVortexError, match="'z'"):
        spec_for(k3, GEN, 10.0, vortices=("z",))
    assert spec_for(k3, "standard", 10.0).kind is STD


def test_options_validation():
    with pytest.raises(InvalidOptionsError):
        SolverOptions(tol=0.0).validate()
    with pytest.raises(InvalidOptionsError):
        SolverOptions(floor=1.0).validate()
    assert SolverOptions.from_settings(tol=None, max_iter=7).max_iter == 7


def test_reduce_on_k3(k3):
    reduced = reduce(spec_for(k3, GEN, 200.0))
    expected = [-8.0 * math.pi / 9.0, 4.0 * math.pi / 9.0, 4.0 * math.pi / 9.0]
    assert np.allclose(reduced.v0, expected, atol=1e-12)
    assert reduced.drift == pytest.approx(4.0 * math.pi / 3.0)


def test_start_is_an_upper_solution(k3):
    reduced = reduce(spec_for(k3, GEN, 200.0))
    assert is_upper_solution(reduced, -reduced.v0, atol=1e-12)
    assert not is_upper_solution(reduced, -reduced.v0 + 5.0)


def test_first_step_decreases_strictly(k3):
    spec = spec_for(k3, GEN, 200.0)
    reduced = reduce(spec)
    operator = ShiftedOperator(k3, default_shift(GEN, 200.0))
    state = initial_state(reduced)
    following = iterate_step(state, reduced, operator)
    assert np.all(following.psi < state.psi)
    assert following.n == 1
    assert following.delta == pytest.approx(np.abs(following.psi - state.psi).max())


def test_shift_at_or_below_lipschitz_bound_is_rejected(k3):
    spec = spec_for(k3, GEN, 50.0)
    reduced = reduce(spec)
    with pytest.raises(InvalidOptionsError):
        iterate_step(initial_state(reduced), reduced, ShiftedOperator(k3, 100.0))


def test_step_sizes_contract(k3):
    spec = spec_for(k3, GEN, 200.0)
    reduced = reduce(spec)
    operator = ShiftedOperator(k3, default_shift(GEN, 200.0))
    state = initial_state(reduced)
    deltas = []
    for _ in range(50):
        following = iterate_step(state, reduced, operator)
        assert np.all(following.psi <= state.psi + 1e-13 * max(1.0, np.abs(state.psi).max()))
        deltas.append(following.delta)
        state = following
    tail = [d for d in deltas[25:] if d > 1e-11]
    assert all(later < earlier for earlier, later in zip(tail, tail[1:]))
    assert deltas[-1] < deltas[0]


def test_solves_k3_at_large_coupling(k3):
    spec = spec_for(k3, GEN, 200.0)
    outcome = solve_at(spec)
    assert_solved(outcome)
    assert np.abs(residual(spec, outcome.u).values).max() <= 1e-8
    assert outcome.trace[0][0] == 1
    assert outcome.trace[-1][0] == outcome.iterations


def test_standard_equation_on_k3(k3):
    assert_solved(solve_at(spec_for(k3, STD, 100.0)))


def test_fast_reject_below_bound(k3):
    outcome = solve_at(spec_for(k3, GEN, 1.0))
    assert outcome.status is SolveStatus.NO_SOLUTION
    assert outcome.iterations == 0
    assert "below-analytic-bound" in outcome.reason
    assert solve_at(spec_for(k3, STD, 16.0)).status is SolveStatus.NO_SOLUTION


def test_nonexistence_is_detected_between_bound_and_threshold(k3):
    # analytic bound 9 pi ~ 28.3, solutions appear only near 42.4 on this graph
    outcome = solve_at(spec_for(k3, GEN, 30.0))
    assert outcome.status is SolveStatus.NO_SOLUTION
    assert outcome.solution is None


def test_matches_newton_from_the_scheme_output(k3):
    spec = spec_for(k3, GEN, 200.0)
    outcome = solve_at(spec)
    polished = newton(spec, outcome.u, tol=1e-11)
    assert polished is not None
    assert np.abs(polished - outcome.u).max() <= 1e-8


@pytest.mark.parametrize("kind", [GEN, STD])
@pytest.mark.parametrize(
    "graph_name, vortex",
    [("k3", "a"), ("torus44", "0_0"), ("random12", "0")],
)
def test_monotone_chain_at_four_times_the_bound(request, kind, graph_name, vortex):
    graph = request.getfixturevalue(graph_name)
    lam = 4.0 * analytic_lambda_bound(kind, 1, graph.volume)
    outcome = solve_at(spec_for(graph, kind, lam, (vortex,)))
    assert_solved(outcome)
    minima = [m for _, _, m in outcome.trace]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(minima, minima[1:]))


def test_residual_detects_perturbation(k3):
    spec = spec_for(k3, GEN, 200.0)
    u = solve_at(spec).u.copy()
    u[1] += 0.1
    assert np.abs(residual(spec, u).values).max() > 0.01


def test_residual_at_the_start_is_the_dirac_term(k3):
    spec = spec_for(k3, GEN, 200.0)
    reduced = reduce(spec)
    r = residual(spec, reduced.v0 - reduced.v0)
    assert r["a"] == pytest.approx(-4.0 * math.pi)
    assert r["b"] == pytest.approx(0.0, abs=1e-12)


def test_residual_rejects_positive_values_for_generalized(k3):
    with pytest.raises(NonlinearDomainError):
        residual(spec_for(k3, GEN, 200.0), [0.1, -1.0, -1.0])
    residual(spec_for(k3, STD, 200.0), [0.1, -1.0, -1.0])


def test_constant_lower_solution(k3):
    spec = spec_for(k3, GEN, 2000.0)
    reduced = reduce(spec)
    c = constant_lower_solution(spec, reduced.v0)
    assert c is not None and c > reduced.v0.max()
    worst = evaluate_nonlinearity(GEN, 2000.0, reduced.v0 - c).max()
    assert worst <= -reduced.drift
    assert is_lower_solution(reduced, np.full(3, -c))
    assert constant_lower_solution(spec.with_lambda(20.0), reduced.v0) is None


def test_constant_lower_solution_needs_the_lower_check(k3, monkeypatch):
    spec = spec_for(k3, GEN, 2000.0)
    reduced = reduce(spec)
    monkeypatch.setattr("app.core.csh_solver.is_lower_solution", lambda *args, **kwargs: False)
    assert constant_lower_solution(spec, reduced.v0) is None


def test_solutions_increase_with_lambda(k3):
    solutions = [solve_at(spec_for(k3, GEN, lam)).solution for lam in (60.0, 100.0, 200.0)]
    for smaller, larger in zip(solutions, solutions[1:]):
        assert np.all(larger - smaller > 1e-10)


def test_solved_set_is_upward_closed(k3):
    solved = [solve_at(spec_for(k3, STD, lam)).solved for lam in (18.0, 22.0, 26.0, 30.0, 40.0, 80.0)]
    assert all(not earlier or later for earlier, later in zip(solved, solved[1:]))
    assert solved[-1]


def test_gauge_shift_leaves_u_unchanged(k3):
    spec = spec_for(k3, GEN, 200.0)
    options = SolverOptions.from_settings(tol=1e-10)
    reference = solve_at(spec, options)
    shifted = solve_at(spec, options, reduced=reduce(spec).with_gauge(3.0))
    assert_solved(reference, tol=1e-10)
    assert np.abs(shifted.u - reference.u).max() <= 1e-10


def test_warm_start_from_larger_coupling(k3):
    high = solve_at(spec_for(k3, GEN, 200.0))
    cold = solve_at(spec_for(k3, GEN, 150.0))
    warm = solve_at(spec_for(k3, GEN, 150.0), psi0=high.solution)
    assert_solved(warm)
    assert np.abs(warm.u - cold.u).max() <= 1e-7


def test_invalid_warm_start_is_rejected(k3):
    spec = spec_for(k3, GEN, 200.0)
    reduced = reduce(spec)
    with pytest.raises(InvalidOptionsError):
        solve_at(spec, psi0=-reduced.v0 + 5.0)


def test_regime_violation_is_inconclusive(k3):
    spec = spec_for(k3, STD, 100.0)
    reduced = reduce(spec)
    state = IterationState(psi=-reduced.v0 + 1.0, n=0, delta=math.inf, min_value=0.0)
    with pytest.raises(RegimeViolationError):
        iterate_step(state, reduced, ShiftedOperator(k3, default_shift(STD, 100.0)))


def test_diagnostics_across_couplings(k3):
    reports = []
    for lam in (60.0, 120.0, 240.0, 480.0):
        spec = spec_for(k3, GEN, lam)
        report = diagnostics(spec, solve_at(spec))
        assert abs(report.fluctuation_integral) <= 1e-10
        assert report.mean_below_bound
        reports.append(report)
    fit = envelope_exponents(reports)
    assert fit.grad_exponent <= 1.0 + 1e-6
    assert fit.sobolev_exponent <= 2.0 + 1e-6
    assert math.isfinite(fit.max_grad_ratio)


def test_diagnostics_need_a_solution(k3):
    spec = spec_for(k3, GEN, 1.0)
    with pytest.raises(InvalidOptionsError):
        diagnostics(spec, solve_at(spec))


def _small_connected_graphs():
    for atlas_graph in nx.graph_atlas_g()[:19]:
        if atlas_graph.number_of_nodes() >= 2 and nx.is_connected(atlas_graph):
            yield to_weighted_graph(atlas_graph)


@pytest.mark.slow
@pytest.mark.parametrize("kind", [GEN, STD])
def test_scheme_dominates_every_newton_root(kind):
    checked = 0
    for graph in _small_connected_graphs():
        lam = 8.0 * analytic_lambda_bound(kind, 1, graph.volume)
        spec = spec_for(graph, kind, lam, (graph.vertices[0],))
        outcome = solve_at(spec)
        assert_solved(outcome)
        roots = newton_roots(spec, starts=100, seed=checked, extra_starts=[outcome.u])
        assert roots
        for root in roots:
            assert np.all(root <= outcome.u + 1e-8)
        checked += 1
    assert checked > 0


@pytest.mark.slow
def test_scale_check_on_large_torus():
    from app.services.generator_service import generate

    graph = generate("torus", [32, 32])
    lam = 4.0 * analytic_lambda_bound(GEN, 1, graph.volume)
    outcome = solve_at(spec_for(graph, GEN, lam, ("0_0",)))
    assert outcome.status is SolveStatus.SOLVED, outcome.reason
    assert outcome.residual_inf <= 1e-8
    assert np.all(outcome.u < 0.0)


def test_fixed_point_touching_zero_is_not_solved(k3, monkeypatch):
    def frozen(state, reduced, operator, tol=None):
        psi = -reduced.v0
        return IterationState(psi=psi, n=state.n + 1, delta=0.0, min_value=float(psi.min()))

    monkeypatch.setattr("app.core.csh_solver.iterate_step", frozen)
    monkeypatch.setattr("app.core.csh_solver.residual", lambda spec, u: VertexFunction.constant(spec.graph, 0.0))
    outcome = solve_at(spec_for(k3, STD, 200.0), SolverOptions(max_iter=5))
    assert outcome.status is not SolveStatus.SOLVED
    assert outcome.u is None


def test_linear_solver_failure_is_inconclusive(k3, monkeypatch):
    def failing(self, b, tol, x0=None):
        raise LinearSolverError("shifted CG did not converge (info=1, max_iter=1)", {"info": 1})

    monkeypatch.setattr(ShiftedOperator, "solve", failing)
    outcome = solve_at(spec_for(k3, GEN, 200.0))
    assert outcome.status is SolveStatus.INCONCLUSIVE
    assert outcome.reason.startswith("linear-solver")
    assert outcome.iterations == 0
    assert np.allclose(outcome.last_iterate, -outcome.v0)
