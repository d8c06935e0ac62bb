import numpy as np
import pytest
from hypothesis import given, strategies as st

from robust_sclp.bench import random_network
from robust_sclp.errors import DegeneracyError
from robust_sclp.model import SCLPData, build_matrices
from robust_sclp.oracle import discrete_optimum
from robust_sclp.sclp import (compute_intervals, rates_dual_instance, sclp_simplex, solution_from_dict,
                              solution_to_dict, solve_boundary, solve_rates, verify_optimality)
from robust_sclp.lp import solve

from conftest import drain, parallel_twins, shared_twins


def test_drain_closed_form():
    d = build_matrices(drain())
    sol = sclp_simplex(d)
    assert sol.objective == pytest.approx(0.75, abs=1e-12)
    np.testing.assert_allclose(sol.breakpoints, [0.0, 0.5, 1.0], atol=1e-12)
    assert sol.intervals[0].u[0] == pytest.approx(1.0)
    assert sol.intervals[1].u[0] == pytest.approx(0.0)
    assert verify_optimality(d, sol).ok


def test_drain_short_horizon():
    d = build_matrices(drain())
    sol = sclp_simplex(d, T=0.5)
    # (0.5 - t) * 2 integrated over [0, 0.5]
    assert sol.objective == pytest.approx(0.25, abs=1e-12)
    assert sclp_simplex(d, T=0.25).N == 1


def test_boundary_network_case():
    d = build_matrices(drain())
    bd = solve_boundary(d)
    np.testing.assert_allclose(bd.x0, d.alpha)
    np.testing.assert_allclose(bd.qN, 0.0)
    assert bd.K0 == {0} and bd.J_end == frozenset()


def test_rates_examples():
    d = build_matrices(drain())
    ib = solve_rates(d, {0}, set())
    assert ib.u[0] == pytest.approx(1.0) and ib.x_dot[0] == pytest.approx(-2.0)
    ib = solve_rates(d, set(), set())
    assert ib.u[0] == pytest.approx(0.0) and ib.x_dot[0] == pytest.approx(0.0)


@given(st.integers(0, 10**6))
def test_rates_dual_matches_explicit_dual(seed):
    d = build_matrices(random_network(seed))
    rng = np.random.default_rng(seed)
    K = frozenset(np.flatnonzero(rng.random(d.K) < 0.6).tolist())
    ib = solve_rates(d, K, set())
    dual = solve(rates_dual_instance(d, K, set()))
    assert dual.optimal
    assert abs(dual.objective - ib.objective) <= 1e-9 * max(1.0, abs(ib.objective))


def test_intervals_single_and_drain():
    d = build_matrices(drain())
    bd = solve_boundary(d)
    v = compute_intervals([solve_rates(d, {0}, set())], bd, 0.3)
    assert v.tau.tolist() == pytest.approx([0.3]) and v.dtau.tolist() == pytest.approx([1.0])
    sol = sclp_simplex(d)
    v = compute_intervals(sol.intervals, bd, 1.0)
    np.testing.assert_allclose(v.tau, [0.5, 0.5], atol=1e-12)


def test_verify_detects_violations():
    d = build_matrices(drain())
    sol = sclp_simplex(d)
    bad = solution_from_dict(solution_to_dict(sol))
    bad.tau[1] = -bad.tau[1]
    assert "tau_positive" in verify_optimality(d, bad).failed()
    bad = solution_from_dict(solution_to_dict(sol))
    bad.intervals[0].u[0] *= 0.99
    bad.intervals[0].x_dot[0] *= 0.99
    assert "strong_duality" in verify_optimality(d, bad).failed()


def test_solution_round_trip():
    d = build_matrices(random_network(3))
    sol = sclp_simplex(d)
    again = solution_from_dict(solution_to_dict(sol))
    assert again.objective == sol.objective
    assert verify_optimality(d, again).ok


@given(st.integers(0, 10**6))
def test_random_networks_verify(seed):
    d = build_matrices(random_network(seed))
    try:
        sol = sclp_simplex(d)
    except DegeneracyError:
        return
    rep = verify_optimality(d, sol)
    assert rep.ok, rep.failed()
    assert np.all(np.diff(sol.trace) > 0)
    assert abs(sol.tau.sum() - d.T) <= 1e-9
    # any discretization is a restriction of the continuous problem
    assert discrete_optimum(d, 40) <= sol.objective + 1e-7 * max(1.0, abs(sol.objective))


@given(st.integers(0, 10**6), st.floats(0.1, 0.9))
def test_prefix_horizon_matches_fresh_solve(seed, frac):
    d = build_matrices(random_network(seed))
    try:
        full = sclp_simplex(d)
        short = sclp_simplex(d, T=frac * d.T)
    except DegeneracyError:
        return
    assert verify_optimality(d.with_horizon(frac * d.T), short).ok
    assert short.objective <= full.objective + 1e-9 * max(1.0, abs(full.objective))


def test_primal_objective_from_states():
    d = build_matrices(random_network(5))
    sol = sclp_simplex(d)
    # holding cost of the trajectory: integral of g.x plus the constant terms
    net = random_network(5)
    g = net.holding_cost
    holding = sum(0.5 * (g @ sol.x[n] + g @ sol.x[n + 1]) * sol.tau[n] for n in range(sol.N))
    constant = g @ d.alpha * d.T + g @ d.a * d.T ** 2 / 2
    assert sol.objective == pytest.approx(constant - holding, rel=1e-9)


def test_twins_raise_degeneracy():
    d = build_matrices(parallel_twins())
    with pytest.raises(DegeneracyError) as err:
        sclp_simplex(d)
    assert sorted(err.value.tied) == [("x", 1, 0), ("x", 1, 1)]
    assert err.value.theta == pytest.approx(1 / 3)


def test_shared_server_twins():
    d = build_matrices(shared_twins())
    sol = sclp_simplex(d)
    assert sol.objective == pytest.approx(4.0)
    assert verify_optimality(d, sol).ok


def test_extra_states_not_supported():
    d = SCLPData.general([[1.0]], [[1.0]], [1.0], [1.0], [1.0], [0.0], 1.0, F=[[1.0]], d=[1.0])
    with pytest.raises(NotImplementedError):
        sclp_simplex(d)
