"""Robust SCLP under one-sided budgeted rate uncertainty.

Every uncertain row ``k`` reads ``sum_j (G_bar + G_tilde * xi)_kj eta_j``
with ``xi in [0, 1]`` and per-server budgets ``sum_{s(j)=i} xi_j <= Gamma_i``;
the objective is ``(c_bar - c_tilde * xi) . eta``.  The worst case of one row
is a greedy pick of its largest positive terms, which makes cutting planes
cheap.  Cuts live in per-signature pools and the robust Rates-LP solutions
feed the same parametric sweep as the nominal problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, LPFailure, MappingVerificationError, RatesLPError, RobustInfeasibleError, SCLPError
from .lp import TOLERANCES, LPInstance, Sign, Status, augment, basic_solution, solve
from .model import FluidNetwork, SCLPData, build_matrices
from .sclp import IntervalBasis, SCLPSolution, sclp_simplex

VIOLATION_TOL = 1e-9


# -- reduction of the uncertainty set -----------------------------------------

@dataclass(frozen=True)
class ReducedProblem:
    """Uncertainty left after absorbing servers whose budget covers every term.

    ``absorbed[k]`` marks entries fixed at their worst value (xi = 1);
    ``residual[k]`` are the flows still uncertain in row ``k``.  Row 0 of
    the objective is kept separately as ``absorbed_objective`` /
    ``residual_objective``.
    """

    G_star: np.ndarray
    c_star: np.ndarray
    absorbed: np.ndarray
    absorbed_objective: np.ndarray
    residual: tuple
    residual_objective: frozenset
    G_tilde: np.ndarray
    c_tilde: np.ndarray
    server: np.ndarray
    budget: np.ndarray
    objective_uncertainty: bool = True

    @property
    def G_tilde_residual(self):
        mask = np.zeros(self.G_tilde.shape, dtype=bool)
        for k, R in enumerate(self.residual):
            mask[k, sorted(R)] = True
        return np.where(mask, self.G_tilde, 0.0)

    @property
    def c_tilde_residual(self):
        mask = np.zeros(self.c_tilde.size, dtype=bool)
        mask[sorted(self.residual_objective)] = True
        return np.where(mask, self.c_tilde, 0.0)


def reduce(data: SCLPData, objective_uncertainty: bool = True) -> ReducedProblem:
    """Absorb every (row, server) block whose uncertain terms fit in the budget.

    Only strictly positive deviations are counted or absorbed; non-positive
    ones can never raise a row's usage (or lower the objective).
    """
    server = np.asarray(data.server)
    budget = np.asarray(data.budget, float)
    K, J = data.G_tilde.shape
    G_star = data.G_bar.copy()
    absorbed = np.zeros((K, J), dtype=bool)
    residual = []
    for k in range(K):
        R = set()
        for i in range(budget.size):
            N = np.flatnonzero((server == i) & (data.G_tilde[k] > 0))
            if N.size == 0:
                continue
            if N.size <= budget[i]:
                absorbed[k, N] = True
            else:
                R.update(N.tolist())
        residual.append(frozenset(R))
    G_star[absorbed] += data.G_tilde[absorbed]
    c_tilde = data.c_tilde if objective_uncertainty else np.zeros(J)
    c_star = data.c_bar.copy()
    absorbed0 = np.zeros(J, dtype=bool)
    R0 = set()
    for i in range(budget.size):
        N = np.flatnonzero((server == i) & (c_tilde > 0))
        if N.size == 0:
            continue
        if N.size <= budget[i]:
            absorbed0[N] = True
        else:
            R0.update(N.tolist())
    c_star[absorbed0] -= c_tilde[absorbed0]
    return ReducedProblem(G_star, c_star, absorbed, absorbed0, tuple(residual), frozenset(R0),
                          data.G_tilde.copy(), np.asarray(c_tilde, float).copy(), server.copy(), budget.copy(),
                          objective_uncertainty)


def identity_reduction(data: SCLPData, objective_uncertainty: bool = True) -> ReducedProblem:
    """No absorption: every positive deviation stays uncertain."""
    K, J = data.G_tilde.shape
    c_tilde = data.c_tilde if objective_uncertainty else np.zeros(J)
    residual = tuple(frozenset(np.flatnonzero(data.G_tilde[k] > 0).tolist()) for k in range(K))
    return ReducedProblem(data.G_bar.copy(), data.c_bar.copy(), np.zeros((K, J), dtype=bool), np.zeros(J, dtype=bool),
                          residual, frozenset(np.flatnonzero(c_tilde > 0).tolist()), data.G_tilde.copy(),
                          np.asarray(c_tilde, float).copy(), np.asarray(data.server).copy(),
                          np.asarray(data.budget, float).copy(), objective_uncertainty)


# -- closed-form inner maximization -------------------------------------------

def worst_case_xi(row, eta, server, budget) -> np.ndarray:
    """Maximizer of ``sum_j row_j eta_j xi_j`` over the per-server budget set.

    On each server the ``floor(Gamma)`` largest positive terms get 1 and the
    next one gets the fractional remainder; ties go to the lowest index.
    """
    w = np.asarray(row, float) * np.asarray(eta, float)
    server = np.asarray(server)
    xi = np.zeros(w.size)
    for i, g in enumerate(np.asarray(budget, float)):
        if g <= 0:
            continue
        flows = np.flatnonzero((server == i) & (w > 0))
        if flows.size == 0:
            continue
        order = flows[np.lexsort((flows, -w[flows]))]
        whole = int(math.floor(g))
        xi[order[:whole]] = 1.0
        frac = g - whole
        if frac > 0 and whole < order.size:
            xi[order[whole]] = frac
    return xi


def inner_value(row, eta, server, budget) -> float:
    w = np.asarray(row, float) * np.asarray(eta, float)
    return float(w @ worst_case_xi(row, eta, server, budget))


def rc_certificates(row, eta, server, budget):
    """Optimal ``(beta, gamma)`` of the dual of the inner problem.

    ``beta[i]`` is the first term on server ``i`` that does not get a full
    unit of perturbation and ``gamma_j = max(0, row_j eta_j - beta[s(j)])``;
    then ``sum_i Gamma_i beta_i + sum_j gamma_j`` equals the inner value.
    """
    w = np.asarray(row, float) * np.asarray(eta, float)
    server = np.asarray(server)
    budget = np.asarray(budget, float)
    beta = np.zeros(budget.size)
    for i, g in enumerate(budget):
        vals = np.sort(w[(server == i) & (w > 0)])[::-1]
        whole = int(math.floor(g))
        if whole < vals.size:
            beta[i] = vals[whole]
    gamma = np.maximum(0.0, w - beta[server])
    return beta, gamma


# -- cutting planes for the robust Rates-LP -----------------------------------

@dataclass
class Cut:
    row: int  # buffer index, or -1 for the objective
    xi: np.ndarray  # full realization, absorbed entries included
    lp_row: int | None = None
    iteration: int = 0


@dataclass
class CutPool:
    """Worst-case realizations per constraint; the nominal realization is implicit."""

    cuts: list = field(default_factory=list)

    def has(self, row, xi):
        return any(c.row == row and np.array_equal(c.xi, xi) for c in self.cuts)

    def for_row(self, row):
        return [c for c in self.cuts if c.row == row]

    def realizations(self):
        return [(c.row, c.xi.copy()) for c in self.cuts]


@dataclass
class MappedDual:
    p: np.ndarray
    delta: np.ndarray
    delta0: np.ndarray
    q_dot: np.ndarray
    y: np.ndarray
    y0: np.ndarray
    omega: np.ndarray
    omega0: np.ndarray
    objective: float
    residual: float


@dataclass
class Certificates:
    beta: np.ndarray  # K x I
    gamma: np.ndarray  # K x J
    beta0: np.ndarray
    gamma0: np.ndarray
    v: np.ndarray
    r: np.ndarray
    objective: float
    residual: float


@dataclass
class RobustRatesSolution:
    K: frozenset
    J: frozenset
    eta: np.ndarray
    x_dot: np.ndarray
    objective: float
    q_dot: np.ndarray
    cut_duals: dict
    pool: CutPool
    master: object
    iterations: int
    K_n: frozenset
    J_n: frozenset
    mapped: MappedDual | None = None
    certificates: Certificates | None = None

    @property
    def u(self):
        return self.eta


class _Master:
    """Nominal Rates-LP plus cut rows; columns are eta, s, xdot, z0, cut slacks."""

    def __init__(self, data: SCLPData, red: ReducedProblem, K, J):
        self.data, self.red = data, red
        nK, nJ, nI = data.K, data.J, data.I
        self.nK, self.nJ, self.nI = nK, nJ, nI
        self.z_col = nJ + nI + nK
        A = np.zeros((nK + nI, self.z_col + 1))
        A[:nK, :nJ] = red.G_star
        A[:nK, nJ + nI:nJ + nI + nK] = np.eye(nK)
        A[nK:, :nJ] = data.H
        A[nK:, nJ:nJ + nI] = np.eye(nI)
        obj = np.concatenate([red.c_star, np.zeros(nI + nK), [-1.0]])
        signs = ([Sign.ZERO if j in J else Sign.NONNEG for j in range(nJ + nI)]
                 + [Sign.FREE if k in K else Sign.NONNEG for k in range(nK)] + [Sign.NONNEG])
        self.instance = LPInstance(A, np.concatenate([data.a, data.b]), obj, "max", signs)
        self.cuts: list[Cut] = []

    def add(self, cut: Cut):
        n = self.instance.A.shape[1]
        row = np.zeros(n)
        if cut.row >= 0:
            row[: self.nJ] = self.data.G_bar[cut.row] + self.data.G_tilde[cut.row] * cut.xi
            rhs = self.data.a[cut.row]
        else:
            row[: self.nJ] = self.red.c_tilde * np.where(self.red.absorbed_objective, 0.0, cut.xi)
            row[self.z_col] = -1.0
            rhs = 0.0
        cut.lp_row = self.instance.A.shape[0]
        self.instance = augment(self.instance, row, rhs)
        self.cuts.append(cut)


class RobustRates:
    """Rates-LP oracle that returns robust solutions via cutting planes."""

    robust = True

    def __init__(self, data: SCLPData, reduced: ReducedProblem | None = None, tol=TOLERANCES,
                 objective_uncertainty: bool = True, certify: bool = True, seed_pools: bool = True,
                 max_solves: int | None = None):
        self.data = data
        self.max_solves = max_solves
        self.red = reduced if reduced is not None else reduce(data, objective_uncertainty)
        self.tol = tol
        self.certify = certify
        self.seed_pools = seed_pools
        self._cache = {}
        self._last_pool = None
        self.total_cut_iterations = 0

    def solve(self, K, J) -> IntervalBasis:
        key = (frozenset(K), frozenset(J))
        if key not in self._cache:
            if self.max_solves is not None and len(self._cache) >= self.max_solves:
                raise RatesBudgetExceeded(f"more than {self.max_solves} robust Rates-LP solves")
            seed = self._last_pool if self.seed_pools else None
            sol = cutting_planes_rates(self.data, *key, reduced=self.red, seed=seed, tol=self.tol,
                                       certify=self.certify)
            self._last_pool = sol.pool
            self.total_cut_iterations += sol.iterations
            self._cache[key] = _robust_interval(sol)
        return self._cache[key]

    def realize(self, basis: frozenset):
        K = frozenset(v for kind, v in basis if kind == "x")
        nu = self.data.J + self.data.I
        J = frozenset(j for j in range(nu) if ("u", j) not in basis)
        try:
            ib = self.solve(K, J)
        except (LPFailure, SCLPError):
            return None
        return ib if ib.basis == basis else None


def _robust_interval(sol: RobustRatesSolution) -> IntervalBasis:
    p = sol.mapped.p if sol.mapped is not None else _collapse_p(sol)
    return IntervalBasis(sol.K_n, sol.J_n, u=sol.eta.copy(), x_dot=sol.x_dot.copy(), p=p, q_dot=sol.q_dot.copy(),
                         objective=sol.objective,
                         extra={"robust": True, "objective_rate": sol.objective, "solution": sol})


def _collapse_p(sol):
    p = np.zeros(sol.x_dot.size)
    for (k, _), val in sol.cut_duals.items():
        if k >= 0:
            p[k] += val
    return p


def cutting_planes_rates(data: SCLPData, K, J, reduced: ReducedProblem | None = None,
                         seed: CutPool | None = None, warm=None, tol=TOLERANCES, max_iterations=None,
                         certify=True) -> RobustRatesSolution:
    """Robust Rates-LP(K, J) by adding worst-case rows until none is violated.

    ``seed`` pre-loads realizations from a neighbouring pool (valid cuts for
    any sign pattern).  The objective's worst case enters through an
    epigraph variable so the returned solution optimizes the worst-case
    objective.
    """
    red = reduced if reduced is not None else reduce(data)
    K, J = frozenset(K), frozenset(J)
    nK, nJ, nI = data.K, data.J, data.I
    server, budget = red.server, red.budget
    Gres = red.G_tilde_residual
    cres = red.c_tilde_residual
    master = _Master(data, red, K, J)
    pool = CutPool()
    if seed is not None:
        for c in seed.cuts:
            if (c.row < 0 or c.row not in K) and not pool.has(c.row, c.xi):
                cut = Cut(c.row, c.xi.copy(), iteration=0)
                master.add(cut)
                pool.cuts.append(cut)
    res = solve(master.instance, warm, tol)
    cap = max_iterations or 4 * nJ * nK + 8
    it = 0
    while True:
        if not res.optimal:
            if res.status is Status.INFEASIBLE:
                raise RobustInfeasibleError(K, J)
            raise RatesLPError(res.status, K, J)
        eta = res.x[:nJ]
        scale = max(1.0, float(np.abs(eta).max(initial=0.0)))
        new = []
        for k in range(nK):
            if k in K:
                continue
            xi_r = worst_case_xi(Gres[k], eta, server, budget)
            xi = np.where(red.absorbed[k], 1.0, xi_r)
            lhs = (data.G_bar[k] + data.G_tilde[k] * xi) @ eta
            if lhs > data.a[k] + VIOLATION_TOL * scale and not pool.has(k, xi):
                new.append(Cut(k, xi, iteration=it + 1))
        xi0_r = worst_case_xi(cres, eta, server, budget)
        xi0 = np.where(red.absorbed_objective, 1.0, xi0_r)
        if (cres * xi0_r) @ eta > res.x[master.z_col] + VIOLATION_TOL * scale and not pool.has(-1, xi0):
            new.append(Cut(-1, xi0, iteration=it + 1))
        if not new:
            break
        it += 1
        if it > cap:
            raise SCLPError(f"cutting planes exceeded {cap} iterations for K={sorted(K)}, J={sorted(J)}")
        for cut in new:
            master.add(cut)
            pool.cuts.append(cut)
        warm_idx = list(res.basis.indices) + list(range(res.instance.A.shape[1], master.instance.A.shape[1]))
        res = solve(master.instance, warm_idx, tol)
    return _finish_rates(data, red, K, J, master, res, pool, it, certify)


def _finish_rates(data, red, K, J, master, res, pool, iterations, certify):
    nK, nJ, nI = data.K, data.J, data.I
    eta = res.x[: nJ + nI].copy()
    e = eta[:nJ]
    server, budget = red.server, red.budget
    worst = np.array([inner_value(data.G_tilde[k], e, server, budget) for k in range(nK)])
    x_dot = data.a - data.G_bar @ e - worst
    c_t = red.c_tilde
    objective = float(data.c_bar @ e - inner_value(c_t, e, server, budget))
    q_dot = -res.reduced_costs[: nJ + nI]
    duals = {}
    for k in range(nK):
        duals[(k, 0)] = float(res.duals[k])
    for c in master.cuts:
        duals[(c.row, id(c))] = float(res.duals[c.lp_row])
    basic = set(res.basis.indices)
    J_n = frozenset(j for j in range(nJ + nI) if j not in basic)
    K_n = set(K)
    for k in range(nK):
        if k in K:
            continue
        cols = [nJ + nI + k] + [master.z_col + 1 + m for m, c in enumerate(master.cuts) if c.row == k]
        if all(col in basic for col in cols):
            K_n.add(k)
    sol = RobustRatesSolution(K, J, eta, x_dot, objective, q_dot, duals, pool, res, iterations,
                              frozenset(K_n), J_n)
    if certify:
        sol.mapped = map_dual(data, red, K, J, sol)
        sol.certificates = primal_certificates(data, red, sol)
    return sol


# -- dual mapping and primal certificates -------------------------------------

def map_dual(data: SCLPData, red: ReducedProblem, K, J, sol: RobustRatesSolution, tol=1e-7) -> MappedDual:
    """Map the cut-LP duals to a solution of the dual robust counterpart.

    ``p'_k`` sums the duals of all rows for buffer ``k``; ``delta'_kj`` sums
    them weighted by the realizations, so the mapped point is feasible and
    has the cut LP's dual objective.
    """
    nK, nJ, nI = data.K, data.J, data.I
    res = sol.master
    master_cuts = [(c, float(res.duals[c.lp_row])) for c in _cuts_of(sol)]
    p = np.array([float(res.duals[k]) for k in range(nK)])
    delta = np.where(red.absorbed, 1.0, 0.0) * p[:, None]
    lam_total = 0.0
    delta0 = np.zeros(nJ)
    for c, val in master_cuts:
        if c.row >= 0:
            p[c.row] += val
            delta[c.row] += val * c.xi
        else:
            lam_total += val
            delta0 += val * c.xi
    delta0 += (1.0 - lam_total) * np.where(red.absorbed_objective, 1.0, 0.0)
    for k in K:
        p[k] = 0.0 if abs(p[k]) <= tol else p[k]
    q_dot = sol.q_dot.copy()
    y = p[:, None] - delta
    y0 = 1.0 - delta0
    server, budget = red.server, red.budget
    S = np.zeros((budget.size, nJ))
    S[server, np.arange(nJ)] = 1.0
    omega = budget[None, :] * p[:, None] - delta @ S.T
    omega0 = budget - S @ delta0
    resid = dual_rc_residual(data, red.c_tilde, K, J, p, delta, delta0, q_dot, y, y0, omega, omega0)
    obj = float(data.a @ p + data.b @ q_dot[nJ:])
    gap = abs(obj - sol.objective) / max(1.0, abs(sol.objective))
    if resid > tol or gap > 1e-8:
        raise MappingVerificationError(
            f"mapped duals fail verification: residual {resid:.3g}, objective gap {gap:.3g}")
    return MappedDual(p, delta, delta0, q_dot, y, y0, omega, omega0, obj, resid)


def _cuts_of(sol):
    return [c for c in sol.pool.cuts if c.lp_row is not None]


def dual_rc_residual(data, c_tilde, K, J, p, delta, delta0, q_dot, y, y0, omega, omega0) -> float:
    """Worst constraint or sign violation of a point of the dual robust counterpart."""
    nJ = data.J
    lhs = data.G_bar.T @ p + (data.G_tilde * delta).sum(axis=0) + c_tilde * delta0 + data.H.T @ q_dot[nJ:] - q_dot[:nJ]
    r = float(np.abs(lhs - data.c_bar).max(initial=0.0))
    r = max(r, float(np.abs(p[:, None] - delta - y).max(initial=0.0)), float(np.abs(delta0 + y0 - 1).max(initial=0.0)))
    neg = [delta, delta0, y, y0, omega, omega0]
    r = max(r, max(float(-a.min(initial=0.0)) for a in neg))
    for k in range(p.size):
        r = max(r, abs(p[k]) if k in K else -p[k])
    for j in range(q_dot.size):
        if j not in J:
            r = max(r, -q_dot[j])
    return r


def primal_certificates(data: SCLPData, red: ReducedProblem, sol: RobustRatesSolution, tol=1e-7) -> Certificates:
    """Primal robust-counterpart variables recovered from the robust controls."""
    nK, nJ = data.K, data.J
    e = sol.eta[:nJ]
    server, budget = red.server, red.budget
    beta = np.zeros((nK, budget.size))
    gamma = np.zeros((nK, nJ))
    for k in range(nK):
        beta[k], gamma[k] = rc_certificates(data.G_tilde[k], e, server, budget)
    beta0, gamma0 = rc_certificates(red.c_tilde, e, server, budget)
    v = beta[:, server] + gamma - data.G_tilde * e
    r = beta0[server] + gamma0 - red.c_tilde * e
    usage = (budget * beta).sum(axis=1) + gamma.sum(axis=1)
    state_res = data.G_bar @ e + usage + sol.x_dot - data.a
    obj = float(data.c_bar @ e - (budget @ beta0 + gamma0.sum()))
    resid = max(float(np.abs(state_res).max(initial=0.0)), float(-v.min(initial=0.0)), float(-r.min(initial=0.0)))
    for k in range(nK):
        if k not in sol.K:
            resid = max(resid, -sol.x_dot[k])
    if resid > tol or abs(obj - sol.objective) > 1e-8 * max(1.0, abs(obj)):
        raise MappingVerificationError(f"primal certificates fail verification: residual {resid:.3g}")
    return Certificates(beta, gamma, beta0, gamma0, v, r, obj, resid)


# -- robust parametric solve --------------------------------------------------

class RatesBudgetExceeded(Exception):
    """The cutting-plane sweep needed more distinct Rates-LP solves than allowed."""


def robust_sclp_simplex(network_or_data, T: float | None = None, reduced: ReducedProblem | None = None,
                        objective_uncertainty: bool = True, tol=TOLERANCES, method: str = "auto",
                        max_rates_solves: int = 3000) -> SCLPSolution:
    """Robust SCLP solution.

    ``method="cutting-planes"`` runs the parametric simplex with every
    Rates-LP replaced by its cutting-plane robust version.  The result is
    certified by the duality gap against the mapped counterpart duals; the
    auxiliary dual states are not tracked by the sweep, so the certificate
    can fail.  ``method="rc"`` runs the parametric simplex on the reduced
    explicit counterpart.  ``"auto"`` tries cutting planes first and falls
    back to the counterpart when the sweep fails or is not certified.
    ``solution.info`` records the route taken.
    """
    data = build_matrices(network_or_data) if isinstance(network_or_data, FluidNetwork) else network_or_data
    if data.server is None or data.budget is None:
        raise ValueError("robust solve needs server assignments and budgets")
    if method not in ("auto", "cutting-planes", "rc"):
        raise ValueError(f"unknown method {method!r}")
    red = reduced if reduced is not None else reduce(data, objective_uncertainty)
    info = {}
    if method in ("auto", "cutting-planes"):
        from .sclp import verify_optimality

        rates = RobustRates(data, red, tol, objective_uncertainty, max_solves=max_rates_solves)
        try:
            sol = sclp_simplex(data, T, rates=rates, tol=tol)
        except (SCLPError, RatesBudgetExceeded) as exc:
            if method == "cutting-planes" or isinstance(exc, RobustInfeasibleError):
                raise
            info["cutting_planes"] = f"{type(exc).__name__}: {exc}"
        else:
            report = verify_optimality(data, sol)
            gap = report.checks["strong_duality"].margin
            info.update(method="cutting-planes", certified=report.ok, duality_gap=gap,
                        cut_iterations=rates.total_cut_iterations, rates_solves=len(rates._cache))
            if report.ok or method == "cutting-planes":
                sol.info = info
                return sol
            info["cutting_planes"] = f"not certified: relative duality gap {gap:.3g}"
    sol = _solve_counterpart(data, red, T, tol, objective_uncertainty)
    sol.info = {**info, **sol.info}
    return sol


COUNTERPART_MARGINS = (0.0, 1e-9, 1e-7, 1e-5)


def _solve_counterpart(data, red, T, tol, objective_uncertainty):
    from .rc import build_sclp_rc
    from .sclp import verify_optimality

    err = None
    for margin in COUNTERPART_MARGINS:
        rc = build_sclp_rc(data, red, objective_uncertainty, budget_margin=margin)
        rc_data = rc.problem
        try:
            rc_sol = sclp_simplex(rc_data, data.T if T is None else T, tol=tol)
        except DegeneracyError as exc:
            # inflating the budgets breaks ties and only adds protection
            err = exc
            continue
        sol = _project(data, rc_data, rc_sol)
        report = verify_optimality(data, sol)
        sol.info = {"method": "rc", "certified": report.ok, "duality_gap": report.checks["strong_duality"].margin,
                    "rc_controls": rc_data.J, "budget_margin": margin}
        return sol
    raise err


def _project(data, rc_data, rc_sol) -> SCLPSolution:
    """Express a counterpart solution in the nominal control space (eta and capacity slacks)."""
    nJ, nI, ncols = data.J, data.I, rc_data.J
    keep = np.concatenate([np.arange(nJ), ncols + np.arange(nI)])
    remap = {int(c): n for n, c in enumerate(keep)}

    def proj_J(J):
        return frozenset(remap[j] for j in J if j in remap)

    intervals = []
    for ib in rc_sol.intervals:
        obj = float(rc_data.c_bar @ ib.u[:ncols])
        intervals.append(IntervalBasis(ib.K, proj_J(ib.J), u=ib.u[keep].copy(), x_dot=ib.x_dot.copy(), p=ib.p.copy(),
                                       q_dot=ib.q_dot[keep].copy(), objective=obj, lp_basis=ib.lp_basis,
                                       extra={"robust": True, "objective_rate": obj, "rc_interval": ib}))
    bd = rc_sol.boundary
    boundary = type(bd)(bd.x0, bd.qN[keep], bd.K0, proj_J(bd.J_end))
    return SCLPSolution(T=rc_sol.T, breakpoints=rc_sol.breakpoints, tau=rc_sol.tau, intervals=intervals, x=rc_sol.x,
                        q=rc_sol.q[:, keep], boundary=boundary, objective=rc_sol.objective,
                        dual_objective=rc_sol.dual_objective, trace=rc_sol.trace, robust=True,
                        rc=(rc_data, rc_sol))


# -- robust solution files ------------------------------------------------------

def robust_solution_to_dict(data: SCLPData, solution: SCLPSolution) -> dict:
    """Solution file plus ``cuts`` and ``rc_certificates`` per interval.

    ``cuts`` lists, per constraint (buffer index or ``"objective"``), the
    realizations in the interval's cut pool; for counterpart solves the pool
    is the worst case at the interval's controls.  Certificates are
    ``beta`` (rows x servers), ``gamma`` (rows x flows), ``p`` and, when the
    dual mapping was run, ``delta_dot``.
    """
    from .sclp import solution_to_dict

    doc = solution_to_dict(solution)
    J = data.J
    server, budget = np.asarray(data.server), np.asarray(data.budget, float)
    rows = [(k, data.G_tilde[k]) for k in range(data.K) if np.any(data.G_tilde[k])]
    if np.any(data.c_tilde):
        rows.append((-1, data.c_tilde))
    cuts, certs = [], []
    for ib in solution.intervals:
        eta = ib.u[:J]
        rs = ib.extra.get("solution")
        pool = {}
        if rs is not None:
            for row, xi in rs.pool.realizations():
                pool.setdefault(row, []).append(xi)
        else:
            for k, g in rows:
                xi = worst_case_xi(g, eta, server, budget)
                if xi.any():
                    pool[k] = [xi]
        cuts.append({("objective" if k < 0 else str(k)): [[float(v) for v in xi] for xi in xis]
                     for k, xis in sorted(pool.items())})
        beta, gamma = [], []
        for _, g in rows:
            b, c = rc_certificates(g, eta, server, budget)
            beta.append([float(v) for v in b])
            gamma.append([float(v) for v in c])
        cert = {"rows": ["objective" if k < 0 else k for k, _ in rows], "beta": beta, "gamma": gamma,
                "p": [float(v) for v in ib.p]}
        if rs is not None and rs.mapped is not None:
            cert["delta_dot"] = [[float(v) for v in r] for r in np.atleast_2d(rs.mapped.delta)]
        certs.append(cert)
    doc["cuts"] = cuts
    doc["rc_certificates"] = certs
    return doc
