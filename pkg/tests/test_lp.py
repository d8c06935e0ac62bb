import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from robust_sclp.errors import SingularBasisError
from robust_sclp.lp import LPBasis, LPInstance, Sign, Status, add_row, basic_solution, check_optimality, pivot, solve


def highs(inst):
    bounds = [(0, None) if s is Sign.NONNEG else (0, 0) if s is Sign.ZERO else (None, None) for s in inst.signs]
    c = -inst.objective if inst.sense == "max" else inst.objective
    r = linprog(c, A_eq=inst.A, b_eq=inst.rhs, bounds=bounds, method="highs")
    if r.status != 0:
        return r.status, None
    return 0, float(-r.fun if inst.sense == "max" else r.fun)


@st.composite
def bounded_lps(draw):
    """Random equality-form LPs with a known feasible point and every variable boxed."""
    m = draw(st.integers(1, 4))
    n = draw(st.integers(1, 6))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    kinds = rng.choice([Sign.NONNEG, Sign.NONNEG, Sign.NONNEG, Sign.FREE, Sign.ZERO], n)
    x0 = np.where(kinds == Sign.FREE, rng.uniform(-1, 1, n), rng.uniform(0, 1, n))
    x0[kinds == Sign.ZERO] = 0.0
    A = np.round(rng.normal(size=(m, n)), 2)
    rows, rhs = [np.hstack([A, np.zeros((m, 2 * n))])], [A @ x0]
    # x_j + s_j = 2 and -x_j + t_j = 2 keep every column in [-2, 2]
    box = np.hstack([np.eye(n), np.eye(n), np.zeros((n, n))])
    neg = np.hstack([-np.eye(n), np.zeros((n, n)), np.eye(n)])
    rows += [box, neg]
    rhs += [np.full(n, 2.0), np.full(n, 2.0)]
    c = np.concatenate([np.round(rng.normal(size=n), 2), np.zeros(2 * n)])
    sense = draw(st.sampled_from(["max", "min"]))
    return LPInstance(np.vstack(rows), np.concatenate(rhs), c, sense, tuple(kinds) + (Sign.NONNEG,) * (2 * n))


@given(bounded_lps())
def test_matches_highs(inst):
    st_ref, ref = highs(inst)
    res = solve(inst)
    if st_ref == 0:
        assert res.status is Status.OPTIMAL
        assert abs(res.objective - ref) <= 1e-7 * max(1.0, abs(ref))
        assert check_optimality(res, 1e-7)["ok"]
    elif st_ref == 2:
        assert res.status is Status.INFEASIBLE


@given(bounded_lps())
def test_warm_start_from_optimal_basis(inst):
    res = solve(inst)
    if not res.optimal:
        return
    again = solve(inst, res.basis)
    assert again.optimal
    assert again.iterations == 0 or res.rank_deficient
    assert abs(again.objective - res.objective) <= 1e-9 * max(1, abs(res.objective))


def test_free_and_zero_columns():
    # max x1 + x2 with x1 free, x2 fixed at zero: x1 + s = 3
    inst = LPInstance([[1.0, 1.0, 1.0]], [3.0], [1.0, 1.0, 0.0], "max", (Sign.FREE, Sign.ZERO, Sign.NONNEG))
    res = solve(inst)
    assert res.optimal and res.x[1] == 0.0
    assert res.objective == pytest.approx(3.0)


def test_infeasible_and_unbounded():
    inf = LPInstance([[1.0, 1.0]], [-1.0], [1.0, 0.0], "max")
    assert solve(inf).status is Status.INFEASIBLE
    unb = LPInstance([[1.0, -1.0]], [0.0], [1.0, 0.0], "max")
    assert solve(unb).status is Status.UNBOUNDED


def test_add_row_reoptimizes():
    inst = LPInstance([[1.0, 1.0, 1.0]], [4.0], [1.0, 2.0, 0.0], "max")
    res = solve(inst)
    assert res.objective == pytest.approx(8.0)
    cut = add_row(inst, res.basis, [0.0, 1.0, 0.0], 1.0)
    assert cut.optimal and cut.objective == pytest.approx(5.0)
    assert cut.instance.A.shape == (2, 4)


def test_pivot_rejects_singular():
    A = np.array([[1.0, 2.0, 2.0], [0.0, 1.0, 1.0]])
    basis = LPBasis((0, 1), A)
    with pytest.raises(SingularBasisError):
        pivot(basis, 2, 0)
    with pytest.raises(ValueError):
        pivot(basis, 1, 0)


def test_basic_solution_checks_optimality():
    inst = LPInstance([[1.0, 1.0, 1.0]], [4.0], [1.0, 2.0, 0.0], "max")
    assert basic_solution(inst, [1]).objective == pytest.approx(8.0)
    assert basic_solution(inst, [0]) is None


def test_dimension_errors():
    with pytest.raises(ValueError):
        LPInstance(np.ones((2, 3)), [1.0], np.ones(3))
    with pytest.raises(ValueError):
        LPInstance(np.ones((1, 2)), [1.0], np.ones(2), sense="maximize")
