import numpy as np
import pytest
from hypothesis import given, strategies as st

from robust_sclp.bench import random_network
from robust_sclp.model import build_matrices
from robust_sclp.oracle import DiscretizationGrid, audit_feasibility, discrete_optimum, discretize, enumerate_inner_max
from robust_sclp.robust import robust_sclp_simplex
from robust_sclp.sclp import sclp_simplex

from conftest import drain


def test_drain_grid_values():
    d = build_matrices(drain())
    # one step: the buffer may only reach zero at t = 1, so eta = 1/2
    assert discrete_optimum(d, 1) == pytest.approx(0.5)
    assert discrete_optimum(d, 2) == pytest.approx(0.75)
    assert discrete_optimum(d, 10_000) == pytest.approx(0.75, abs=1e-9)


@given(st.integers(0, 10**6))
def test_refinement_is_monotone(seed):
    d = build_matrices(random_network(seed))
    coarse, fine = discrete_optimum(d, 8), discrete_optimum(d, 16)
    assert fine >= coarse - 1e-8 * max(1.0, abs(coarse))


def test_solvers_agree():
    lp = discretize(build_matrices(random_network(6)), 50)
    a, b = lp.solve("highs").objective, lp.solve("clarabel").objective
    assert a == pytest.approx(b, rel=1e-8)
    with pytest.raises(ValueError):
        lp.solve("cplex")


def test_grid_validation():
    g = DiscretizationGrid(2.0, 4, 3, 2)
    assert g.dt == 0.5 and g.size == 20
    assert g.u_slice(1) == slice(3, 6) and g.x_slice(0) == slice(12, 14)
    with pytest.raises(ValueError):
        DiscretizationGrid(1.0, 0, 1, 1)


def test_enumeration_limit():
    with pytest.raises(ValueError):
        enumerate_inner_max(np.ones(30), np.ones(30), [3.0], np.zeros(30, dtype=int))


def test_audit_separates_nominal_and_robust():
    d = build_matrices(drain(budget=1.0, mu_tilde=1.0))
    rob = robust_sclp_simplex(d)
    assert audit_feasibility(d, rob, 500).max_violation <= 1e-12
    # a plan built for the slow rate overdrains when the fast rate occurs
    slow = build_matrices(drain(budget=1.0).replace(mu_bar=np.array([1.0])))
    plan = sclp_simplex(slow)
    rep = audit_feasibility(d, plan, 500)
    assert rep.max_state_violation > 0.1
    assert rep.as_dict()["state"]["buffer"] == 0


def test_audit_is_seeded():
    d = build_matrices(random_network(2, I=2, K=3))
    sol = sclp_simplex(d)
    a = audit_feasibility(d, sol, 200, seed=5).as_dict()
    b = audit_feasibility(d, sol, 200, seed=5).as_dict()
    assert a == b
