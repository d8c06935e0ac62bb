import itertools

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import linprog

from robust_sclp.bench import random_network
from robust_sclp.errors import RobustInfeasibleError
from robust_sclp.model import build_matrices
from robust_sclp.oracle import enumerate_inner_max
from robust_sclp.rc import build_rates_rc, lp_residual, pack_dual, pack_primal
from robust_sclp.robust import (cutting_planes_rates, identity_reduction, inner_value, rc_certificates, reduce,
                                robust_sclp_simplex, robust_solution_to_dict, worst_case_xi)
from robust_sclp.sclp import sclp_simplex, verify_optimality

from conftest import drain, highs_value, rates_case


@st.composite
def inner_cases(draw):
    I = draw(st.integers(1, 3))
    J = draw(st.integers(1, 9))
    server = np.array(draw(st.lists(st.integers(0, I - 1), min_size=J, max_size=J)))
    vals = st.one_of(st.just(0.0), st.floats(-2, 3, allow_nan=False), st.sampled_from([0.5, 1.0, 2.0]))
    row = np.array(draw(st.lists(vals, min_size=J, max_size=J)))
    eta = np.array(draw(st.lists(st.floats(0, 2, allow_nan=False), min_size=J, max_size=J)))
    counts = np.bincount(server, minlength=I)
    budget = np.array([draw(st.one_of(st.integers(0, int(n)).map(float), st.floats(0, float(n))))
                       for n in counts])
    return row, eta, server, budget


def lp_inner(row, eta, server, budget):
    w = row * eta
    I = budget.size
    A = np.zeros((I, w.size))
    A[server, np.arange(w.size)] = 1.0
    # default HiGHS tolerances treat reduced costs below 1e-7 as zero
    r = linprog(-w, A_ub=A, b_ub=budget, bounds=[(0, 1)] * w.size, method="highs",
                options={"dual_feasibility_tolerance": 1e-10, "primal_feasibility_tolerance": 1e-10})
    return -r.fun


@given(inner_cases())
def test_worst_case_three_ways(case):
    row, eta, server, budget = case
    xi = worst_case_xi(row, eta, server, budget)
    val = float((row * eta) @ xi)
    assert np.all((xi >= 0) & (xi <= 1))
    for i, g in enumerate(budget):
        assert xi[server == i].sum() <= g + 1e-12
    assert val == pytest.approx(lp_inner(row, eta, server, budget), abs=1e-10)
    assert val == pytest.approx(enumerate_inner_max(row, eta, budget, server), abs=1e-10)


@given(inner_cases())
def test_certificates_reproduce_inner_value(case):
    row, eta, server, budget = case
    beta, gamma = rc_certificates(row, eta, server, budget)
    assert np.all(beta >= 0) and np.all(gamma >= 0)
    w = row * eta
    # dual feasibility: beta_s(j) + gamma_j covers every term
    assert np.all(beta[server] + gamma >= w - 1e-12)
    assert budget @ beta + gamma.sum() == pytest.approx(inner_value(row, eta, server, budget), abs=1e-10)


@given(inner_cases())
def test_tie_breaking_value_invariant(case):
    row, eta, server, budget = case
    perm = np.random.default_rng(0).permutation(row.size)
    a = inner_value(row, eta, server, budget)
    b = inner_value(row[perm], eta[perm], server[perm], budget)
    assert a == pytest.approx(b, abs=1e-12)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_reduction_soundness(seed, eseed):
    rng = np.random.default_rng(eseed)
    from conftest import mixed_budget

    data = build_matrices(mixed_budget(random_network(seed), rng))
    red = reduce(data)
    eta = rng.uniform(0, 1, data.J)
    server, budget = np.asarray(data.server), np.asarray(data.budget)
    for k in range(data.K):
        full = inner_value(data.G_tilde[k], eta, server, budget)
        box = float((data.G_tilde[k] * eta)[red.absorbed[k]].sum())
        rest = inner_value(red.G_tilde_residual[k], eta, server, budget)
        assert full == pytest.approx(box + rest, abs=1e-10)
        np.testing.assert_allclose(red.G_star[k], data.G_bar[k] + np.where(red.absorbed[k], data.G_tilde[k], 0))


@given(st.integers(0, 10**6))
def test_cutting_planes_equal_counterpart(seed):
    net, K, J = rates_case(seed)
    data = build_matrices(net)
    rc = build_rates_rc(data, K, J)
    status, ref = highs_value(rc.primal)
    for red in (reduce(data), identity_reduction(data)):
        try:
            sol = cutting_planes_rates(data, K, J, reduced=red)
        except RobustInfeasibleError:
            assert status == 2
            continue
        assert status == 0
        assert sol.objective == pytest.approx(ref, abs=1e-8 * max(1.0, abs(ref)))
        z = pack_dual(rc, sol.mapped)
        assert lp_residual(rc.dual, z) <= 1e-7
        assert rc.dual.objective @ z == pytest.approx(ref, abs=1e-8 * max(1.0, abs(ref)))
        zp = pack_primal(rc, sol)
        assert lp_residual(rc.primal, zp) <= 1e-7
        # no realization enters a pool twice
        keys = [(c.row, tuple(c.xi)) for c in sol.pool.cuts]
        assert len(keys) == len(set(keys))


@given(st.integers(0, 10**6))
def test_budget_monotone(seed):
    net, K, J = rates_case(seed)
    lo = net.replace(budget=np.zeros(net.I))
    hi = net.replace(budget=np.bincount(net.server, minlength=net.I).astype(float))
    vals = []
    for n in (lo, net, hi):
        try:
            vals.append(cutting_planes_rates(build_matrices(n), K, J).objective)
        except RobustInfeasibleError:
            vals.append(-np.inf)
    assert vals[0] >= vals[1] - 1e-9 and vals[1] >= vals[2] - 1e-9


def test_no_deviation_equals_nominal():
    net = random_network(4).nominal()
    d = build_matrices(net)
    nom = sclp_simplex(d)
    rob = robust_sclp_simplex(d)
    assert rob.objective == pytest.approx(nom.objective, rel=1e-12)
    np.testing.assert_allclose(rob.breakpoints, nom.breakpoints, atol=1e-12)


def test_single_buffer_box_case():
    # the state row is worst at the fast nominal rate, the objective at the slow one
    rob = robust_sclp_simplex(drain(budget=1.0, mu_tilde=1.0))
    np.testing.assert_allclose(rob.breakpoints, [0.0, 0.5, 1.0], atol=1e-12)
    assert rob.intervals[0].u[0] == pytest.approx(1.0)
    assert rob.objective == pytest.approx(0.375, abs=1e-12)
    same = robust_sclp_simplex(drain(budget=1.0, mu_tilde=1.0), objective_uncertainty=False)
    assert same.objective == pytest.approx(0.75, abs=1e-12)


def test_robust_file_has_cuts_and_certificates():
    d = build_matrices(random_network(3, I=2, K=4))
    sol = robust_sclp_simplex(d)
    doc = robust_solution_to_dict(d, sol)
    assert len(doc["cuts"]) == len(doc["rc_certificates"]) == sol.N
    assert doc["info"]["certified"]


@pytest.mark.parametrize("seed", range(4))
def test_robust_below_nominal(seed):
    d = build_matrices(random_network(seed, I=2, K=3))
    rob = robust_sclp_simplex(d)
    assert verify_optimality(d, rob).ok
    assert rob.objective <= sclp_simplex(d).objective + 1e-9
