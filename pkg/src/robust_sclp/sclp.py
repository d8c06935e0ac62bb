"""Parametric simplex for separated continuous linear programs.

The solution of an SCLP is a sequence of adjacent Rates-LP bases.  Interval
lengths and breakpoint state values follow from the bases by small linear
systems, and the algorithm grows the horizon from 0 to ``T``, repairing the
basis sequence every time an interval length or a primal/dual state value
reaches zero.

Variables are named ``("u", j)`` for controls (``j >= J`` are the capacity
slacks) and ``("x", k)`` for states.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, LPFailure, RatesLPError, SCLPError
from .lp import TOLERANCES, LPInstance, Sign, basic_solution, solve
from .model import SCLPData

log = logging.getLogger(__name__)

MAX_BRIDGE_DEPTH = 3
MAX_BRIDGE_EVALUATIONS = 20_000  # Rates-LP bases examined per collision


@dataclass(frozen=True)
class BoundarySolution:
    x0: np.ndarray
    qN: np.ndarray
    K0: frozenset
    J_end: frozenset


@dataclass
class IntervalBasis:
    """Complementary primal/dual Rates-LP solution for one interval.

    ``K`` holds states whose slope is basic, ``J`` controls that are
    nonbasic; together they name the primal basis.
    """

    K: frozenset
    J: frozenset
    u: np.ndarray
    x_dot: np.ndarray
    p: np.ndarray
    q_dot: np.ndarray
    objective: float = float("nan")
    lp_basis: object = None
    extra: dict = field(default_factory=dict)

    @property
    def basis(self) -> frozenset:
        nu = self.u.size
        return frozenset([("u", j) for j in range(nu) if j not in self.J]
                         + [("x", k) for k in self.K])

    @property
    def signature(self):
        return self.K, self.J


@dataclass
class IntervalValues:
    tau: np.ndarray
    dtau: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    leaving: list


@dataclass
class SCLPSolution:
    T: float
    breakpoints: np.ndarray
    tau: np.ndarray
    intervals: list
    x: np.ndarray
    q: np.ndarray
    boundary: BoundarySolution
    objective: float
    dual_objective: float
    trace: list
    robust: bool = False
    info: dict = field(default_factory=dict)
    rc: tuple | None = None  # (rc_data, rc_solution) when solved through the explicit counterpart

    @property
    def N(self):
        return len(self.intervals)

    @property
    def leaving(self):
        return [_leaving(a, b) for a, b in zip(self.intervals, self.intervals[1:])]

    def control_at(self, t):
        n = int(np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0, self.N - 1))
        return self.intervals[n].u

    def state_at(self, t):
        n = int(np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0, self.N - 1))
        return self.x[n] + self.intervals[n].x_dot * (t - self.breakpoints[n])


# -- Boundary-LP --------------------------------------------------------------

def solve_boundary(data: SCLPData, tol=TOLERANCES) -> BoundarySolution:
    K, L, J, I = data.K, data.L, data.J, data.I
    primal = LPInstance(np.hstack([np.eye(K), data.F]), data.alpha,
                        np.concatenate([np.zeros(K), data.d]), "max")
    dual = LPInstance(np.hstack([-np.eye(J), data.H.T]), data.gamma,
                      np.concatenate([np.zeros(J), data.b]), "min")
    rp, rd = solve(primal, tol=tol), solve(dual, tol=tol)
    if not rp.optimal:
        raise LPFailure(rp.status, "Boundary-LP (primal) has no optimal solution")
    if not rd.optimal:
        raise LPFailure(rd.status, "Boundary-LP (dual) has no optimal solution")
    x0 = np.where(np.abs(rp.x) <= tol.feasibility, 0.0, rp.x)
    qN = np.where(np.abs(rd.x) <= tol.feasibility, 0.0, rd.x)
    return BoundarySolution(x0, qN, frozenset(np.flatnonzero(x0 > tol.feasibility).tolist()),
                            frozenset(np.flatnonzero(qN > tol.feasibility).tolist()))


# -- Rates-LP -----------------------------------------------------------------

def rates_instance(data: SCLPData, K, J, G=None, c=None) -> LPInstance:
    """Primal Rates-LP(K, J): columns are the J+I controls then the K+L slopes."""
    G = data.G_bar if G is None else G
    c = data.c_bar if c is None else c
    nK, nJ, nI, nL = data.K, data.J, data.I, data.L
    A = np.zeros((nK + nI, nJ + nI + nK + nL))
    A[:nK, :nJ] = G
    A[:nK, nJ + nI:nJ + nI + nK] = np.eye(nK)
    A[:nK, nJ + nI + nK:] = data.F
    A[nK:, :nJ] = data.H
    A[nK:, nJ:nJ + nI] = np.eye(nI)
    obj = np.concatenate([c, np.zeros(nI + nK), data.d])
    signs = ([Sign.ZERO if j in J else Sign.NONNEG for j in range(nJ + nI)]
             + [Sign.FREE if k in K else Sign.NONNEG for k in range(nK + nL)])
    names = tuple([f"u{j}" for j in range(nJ + nI)] + [f"xdot{k}" for k in range(nK + nL)])
    return LPInstance(A, np.concatenate([data.a, data.b]), obj, "max", signs, names)


def rates_dual_instance(data: SCLPData, K, J) -> LPInstance:
    """Dual Rates-LP(K, J) written explicitly: columns p (K+L) then q_dot (J+I)."""
    nK, nJ, nI, nL = data.K, data.J, data.I, data.L
    A = np.zeros((nJ + nL, nK + nL + nJ + nI))
    A[:nJ, :nK] = data.G_bar.T
    A[:nJ, nK + nL:nK + nL + nJ] = -np.eye(nJ)
    A[:nJ, nK + nL + nJ:] = data.H.T
    A[nJ:, :nK] = data.F.T
    A[nJ:, nK:nK + nL] = -np.eye(nL)
    obj = np.concatenate([data.a, np.zeros(nL + nJ), data.b])
    signs = ([Sign.ZERO if k in K else Sign.NONNEG for k in range(nK + nL)]
             + [Sign.FREE if j in J else Sign.NONNEG for j in range(nJ + nI)])
    return LPInstance(A, np.concatenate([data.c_bar, data.d]), obj, "min", signs)


def solve_rates(data: SCLPData, K, J, warm=None, tol=TOLERANCES) -> IntervalBasis:
    K, J = frozenset(K), frozenset(J)
    inst = rates_instance(data, K, J)
    res = solve(inst, warm, tol)
    if not res.optimal:
        raise RatesLPError(res.status, K, J)
    return _interval_from_lp(data, res)


def _interval_from_lp(data: SCLPData, res) -> IntervalBasis:
    nu = data.J + data.I
    x, rc = res.x, res.reduced_costs
    basic = set(res.basis.indices)
    Kn = frozenset(k - nu for k in basic if k >= nu)
    Jn = frozenset(j for j in range(nu) if j not in basic)
    return IntervalBasis(Kn, Jn, u=x[:nu].copy(), x_dot=x[nu:].copy(), p=-rc[nu:], q_dot=-rc[:nu],
                         objective=res.objective, lp_basis=res.basis)


class NominalRates:
    """Rates-LP oracle keyed by sign pattern, with solve caching."""

    robust = False

    def __init__(self, data: SCLPData, tol=TOLERANCES):
        self.data = data
        self.tol = tol
        self._cache = {}
        self._last_basis = None

    def solve(self, K, J) -> IntervalBasis:
        key = (frozenset(K), frozenset(J))
        if key not in self._cache:
            ib = solve_rates(self.data, *key, warm=self._last_basis, tol=self.tol)
            self._last_basis = ib.lp_basis
            self._cache[key] = ib
        return self._cache[key]

    def realize(self, basis: frozenset):
        """The interval whose optimal basis is exactly ``basis``, or None."""
        K = frozenset(v for kind, v in basis if kind == "x")
        nu = self.data.J + self.data.I
        J = frozenset(j for j in range(nu) if ("u", j) not in basis)
        cols = sorted(j if kind == "u" else nu + j for kind, j in basis)
        res = basic_solution(rates_instance(self.data, K, J), cols, self.tol)
        return None if res is None else _interval_from_lp(self.data, res)


# -- interval lengths and breakpoint values ------------------------------------

DEGENERATE_TOL = 1e-10


def _leaving(a: IntervalBasis, b: IntervalBasis):
    """The variable whose leaving links interval ``a`` to the next one ``b``.

    Besides that one pivot, controls that sit at zero in ``a`` may also
    leave (degenerate swaps); they add no interval equation.  Returns None
    when the bases are not linked this way.
    """
    out = a.basis - b.basis
    if len(out) == 1:
        return next(iter(out))
    real = [v for v in out if (abs(a.u[v[1]]) > DEGENERATE_TOL if v[0] == "u" else abs(b.p[v[1]]) > DEGENERATE_TOL)]
    return real[0] if len(real) == 1 else None


def _adjacent(a: IntervalBasis, b: IntervalBasis) -> bool:
    return bool(a.basis - b.basis) and _leaving(a, b) is not None


def complementarity_violation(seq, x, q) -> float:
    """Largest ``|u_j| q_j`` or ``p_k x_k`` over interval ends."""
    worst = 0.0
    for n, ib in enumerate(seq):
        qe = np.maximum(np.abs(q[n]), np.abs(q[n + 1]))
        xe = np.maximum(np.abs(x[n]), np.abs(x[n + 1]))
        worst = max(worst, float((np.abs(ib.u) * qe).max(initial=0.0)),
                    float((np.abs(ib.p) * xe).max(initial=0.0)))
    return worst


def compute_intervals(seq, boundary: BoundarySolution, T: float) -> IntervalValues:
    """Interval lengths, breakpoint values and their horizon derivatives."""
    N = len(seq)
    leaving = []
    M = np.zeros((N, N))
    r = np.zeros(N)
    for n in range(N - 1):
        v = _leaving(seq[n], seq[n + 1])
        if v is None:
            raise DegeneracyError(float("nan"), [("basis", n + 1), ("basis", n + 2)],
                                  f"bases {n + 1} and {n + 2} are not adjacent")
        leaving.append(v)
        kind, idx = v
        if kind == "x":
            M[n, : n + 1] = [seq[m].x_dot[idx] for m in range(n + 1)]
            r[n] = -boundary.x0[idx]
        else:
            M[n, n + 1:] = [seq[m].q_dot[idx] for m in range(n + 1, N)]
            r[n] = -boundary.qN[idx]
    M[N - 1] = 1.0
    r[N - 1] = T
    e = np.zeros(N)
    e[-1] = 1.0
    try:
        sol = np.linalg.solve(M, np.column_stack([r, e]))
    except np.linalg.LinAlgError:
        raise DegeneracyError(float("nan"), [("sequence", N)],
                              "singular interval-length system for the basis sequence") from None
    if np.linalg.cond(M) > 1e12:
        raise DegeneracyError(float("nan"), [("sequence", N)],
                              "ill-conditioned interval-length system for the basis sequence")
    tau, dtau = sol[:, 0], sol[:, 1]
    xd = np.array([b.x_dot for b in seq])
    qd = np.array([b.q_dot for b in seq])
    x = boundary.x0 + np.vstack([np.zeros(xd.shape[1]), np.cumsum(xd * tau[:, None], axis=0)])
    dx = np.vstack([np.zeros(xd.shape[1]), np.cumsum(xd * dtau[:, None], axis=0)])
    rev = np.cumsum((qd * tau[:, None])[::-1], axis=0)[::-1]
    drev = np.cumsum((qd * dtau[:, None])[::-1], axis=0)[::-1]
    q = boundary.qN + np.vstack([rev, np.zeros(qd.shape[1])])
    dq = np.vstack([drev, np.zeros(qd.shape[1])])
    return IntervalValues(tau, dtau, x, dx, q, dq, leaving)


# -- objective values ---------------------------------------------------------

def primal_objective(data: SCLPData, T, tau, intervals) -> float:
    t = np.concatenate([[0.0], np.cumsum(tau)])
    total = 0.0
    for n, ib in enumerate(intervals):
        rate_c = ib.extra.get("objective_rate", data.c_bar @ ib.u[: data.J])
        total += data.gamma @ ib.u[: data.J] * tau[n]
        total += rate_c * tau[n] * (T - 0.5 * (t[n] + t[n + 1]))
    return float(total)


def dual_objective(data: SCLPData, T, tau, intervals, q) -> float:
    t = np.concatenate([[0.0], np.cumsum(tau)])
    J, K = data.J, data.K
    total = 0.0
    for n, ib in enumerate(intervals):
        p = ib.p[:K]
        mid = 0.5 * (t[n] + t[n + 1])
        total += (data.alpha @ p) * tau[n] + (data.a @ p) * tau[n] * mid
        total += data.b @ (0.5 * (q[n, J:] + q[n + 1, J:])) * tau[n]
    return float(total)


# -- the parametric sweep -----------------------------------------------------

def sclp_simplex(data: SCLPData, T: float | None = None, rates=None, tol=TOLERANCES,
                 max_iterations: int | None = None) -> SCLPSolution:
    """Solve the SCLP by growing the horizon from 0 to ``T``."""
    T = data.T if T is None else float(T)
    if data.L:
        raise NotImplementedError("the parametric solver covers problems without extra states (L = 0)")
    if T <= 0:
        raise ValueError("horizon must be positive")
    boundary = solve_boundary(data, tol)
    rates = NominalRates(data, tol) if rates is None else rates
    seq = [rates.solve(boundary.K0, boundary.J_end)]
    h = 0.0
    trace = []
    cap = max_iterations or 20 * (data.K + data.J + data.I) ** 2 + 100
    scale = max(1.0, T, float(np.abs(boundary.x0).max(initial=0)), float(np.abs(boundary.qN).max(initial=0)))
    for _ in range(cap):
        vals = compute_intervals(seq, boundary, h)
        cands = _collision_candidates(vals, tol.ratio)
        delta = min((c[3] for c in cands), default=np.inf)
        if h + delta >= T * (1 - 1e-13):
            return _finish(data, T, seq, boundary, trace, rates)
        if delta <= 1e-13 * scale:
            tied = [c[:3] for c in cands if c[3] <= 1e-13 * scale]
            raise DegeneracyError(h / T, tied, "zero-length parametric step")
        h += delta
        trace.append(h / T)
        ties = [c for c in cands if c[3] <= delta + 1e-9 * max(delta, 1e-3)]
        seq = _resolve_collision(seq, ties, boundary, rates, h, h / T, scale)
    raise SCLPError(f"parametric sweep exceeded {cap} iterations")


def _collision_candidates(vals: IntervalValues, rtol):
    out = []
    for n in range(vals.tau.size):
        if vals.dtau[n] < -rtol:
            out.append(("tau", n, None, max(vals.tau[n], 0.0) / -vals.dtau[n]))
    Np1, nk = vals.x.shape
    for n in range(1, Np1):
        for k in np.flatnonzero(vals.dx[n] < -rtol):
            out.append(("x", n, int(k), max(vals.x[n, k], 0.0) / -vals.dx[n, k]))
    for n in range(0, Np1 - 1):
        for j in np.flatnonzero(vals.dq[n] < -rtol):
            out.append(("q", n, int(j), max(vals.q[n, j], 0.0) / -vals.dq[n, j]))
    return out


def _resolve_collision(seq, ties, boundary, rates, h, theta, scale):
    N = len(seq)
    tied = [c[:3] for c in ties]
    kinds = {c[0] for c in ties}
    if len(kinds) > 1:
        # a state reaching zero at an end of a collapsing run is implied by the collapse
        runs = [c[1] for c in ties if c[0] == "tau"]
        if not runs or any(not min(runs) <= c[1] <= max(runs) + 1 for c in ties if c[0] != "tau"):
            raise DegeneracyError(theta, tied, "collision tie across variable classes")
        ties = [c for c in ties if c[0] == "tau"]
        kinds = {"tau"}
    kind = kinds.pop()
    start = end = None  # None marks the boundary at 0 / T
    if kind == "tau":
        ns = sorted(c[1] for c in ties)
        if ns != list(range(ns[0], ns[-1] + 1)):
            raise DegeneracyError(theta, tied, "non-contiguous interval collapse")
        n1, n2 = ns[0], ns[-1]
        v1 = _leaving(seq[n1 - 1], seq[n1]) if n1 > 0 else None
        v2 = _leaving(seq[n2], seq[n2 + 1]) if n2 < N - 1 else None
        kept = seq[:n1] + seq[n2 + 1:]
        if n1 == 0 or n2 == N - 1 or _adjacent(seq[n1 - 1], seq[n2 + 1]):
            if _locally_valid(kept, boundary, h, 0, 0, scale, rates.tol):
                return kept
            raise DegeneracyError(theta, tied, "interval removal leaves an invalid basis sequence")
        pos = n1
        start, end = seq[n1 - 1], seq[n2 + 1]
        v_first, v_second = v2, v1
    else:
        if len(ties) > 1:
            raise DegeneracyError(theta, tied, f"simultaneous {kind}-state collisions")
        _, n, idx, _ = ties[0]
        kept = list(seq)
        pos = n
        start = seq[n - 1] if n >= 1 else None
        end = seq[n] if n < N else None
        v_between = _leaving(seq[n - 1], seq[n]) if 1 <= n < N else None
        if kind == "x":
            v_first, v_second = ("x", idx), v_between
        else:
            v_first, v_second = v_between, ("u", idx)
    K_start = start.K if start is not None else boundary.K0
    J_end = end.J if end is not None else boundary.J_end
    Kstar = K_start - ({v_first[1]} if v_first and v_first[0] == "x" else set())
    Jstar = J_end - ({v_second[1]} if v_second and v_second[0] == "u" else set())
    try:
        D = rates.solve(Kstar, Jstar)
    except LPFailure:
        D = None
    candidates = []
    if D is not None and _fits(D, start, end, boundary):
        candidates.append([D])
    budget = [MAX_BRIDGE_EVALUATIONS]
    if D is not None:
        # other bases of the same degenerate vertex may link where D does not
        variants = (([V] for V in _variants(D, rates, budget) if _fits(V, start, end, boundary)))
    else:
        variants = iter(())
    everything = frozenset([("u", j) for j in range(seq[0].u.size)] + [("x", k) for k in range(seq[0].x_dot.size)])
    options = itertools.chain(candidates, variants, _bridges(start, end, D, rates, boundary, budget=budget),
                              _bridges(start, end, D, rates, boundary, pool=everything, fixed=frozenset(),
                                       depth=MAX_BRIDGE_DEPTH + 1, budget=budget))
    try:
        for ins in options:
            new = kept[:pos] + ins + kept[pos:]
            if _locally_valid(new, boundary, h, len(kept[:pos]), len(ins), scale, rates.tol):
                if not candidates or ins is not candidates[0]:
                    log.debug("sub-problem bridge of length %d at theta=%.6g", len(ins), theta)
                return new
    except _SearchExhausted:
        raise DegeneracyError(theta, tied, "no valid basis insertion found for collision "
                              f"within {MAX_BRIDGE_EVALUATIONS} candidate bases") from None
    raise DegeneracyError(theta, tied, "no valid basis insertion found for collision")


class _SearchExhausted(Exception):
    pass


def _variants(D, rates, budget, depth=2):
    """Optimal bases with the same primal rates as ``D``, reached by swapping out zero-valued basics."""
    seen = {D.basis}
    frontier = [D]
    everything = frozenset([("u", j) for j in range(D.u.size)] + [("x", k) for k in range(D.x_dot.size)])
    for _ in range(depth):
        nxt = []
        for B in frontier:
            zero = [v for v in sorted(B.basis)
                    if abs(B.u[v[1]] if v[0] == "u" else B.x_dot[v[1]]) <= DEGENERATE_TOL]
            for v in zero:
                for w in sorted(everything - B.basis):
                    nb = (B.basis - {v}) | {w}
                    if nb in seen:
                        continue
                    seen.add(nb)
                    budget[0] -= 1
                    if budget[0] < 0:
                        raise _SearchExhausted
                    ib = rates.realize(nb)
                    if ib is None or not (np.allclose(ib.u, D.u, atol=1e-9) and np.allclose(ib.x_dot, D.x_dot, atol=1e-9)):
                        continue
                    nxt.append(ib)
                    yield ib
        frontier = nxt


def _fits(D, start, end, boundary):
    ok_start = _adjacent(start, D) if start is not None else boundary.K0 <= D.K
    ok_end = _adjacent(D, end) if end is not None else boundary.J_end <= D.J
    return ok_start and ok_end


def _bridges(start, end, D, rates, boundary, pool=None, fixed=None, depth=MAX_BRIDGE_DEPTH, budget=None):
    """Short adjacent paths between ``start`` and ``end`` (the SCLP sub-problem).

    By default paths run over bases built from the variables of ``start``,
    ``end`` and the Rates-LP answer ``D``, keeping the variables shared by all
    three.  Every basis on a path must be optimal for its own sign pattern,
    which also prunes the search.  Shorter paths come first.
    """
    anchors = [b.basis for b in (start, end, D) if b is not None]
    if pool is None:
        pool = frozenset().union(*anchors)
    if fixed is None:
        fixed = frozenset.intersection(*anchors) if len(anchors) == 3 else frozenset()
    seen = {}

    def realize(basis):
        if basis not in seen:
            if budget is not None:
                budget[0] -= 1
                if budget[0] < 0:
                    raise _SearchExhausted
            seen[basis] = rates.realize(basis)
        return seen[basis]

    def neighbours(basis):
        for v in sorted(basis - fixed):
            for w in sorted(pool - basis):
                nb = (basis - {v}) | {w}
                ib = realize(nb)
                if ib is not None:
                    yield nb, ib

    def ends_ok(ib):
        return _adjacent(ib, end) if end is not None else boundary.J_end <= ib.J

    if start is not None:
        first = list(neighbours(start.basis))
    else:
        seeds = [D] if D is not None else []
        first = [(s.basis, s) for s in seeds] + [nb for s in seeds for nb in neighbours(s.basis)]
        first = [(b, ib) for b, ib in first if boundary.K0 <= ib.K]
    excluded = {b.basis for b in (start, end) if b is not None}

    def extend(path, size):
        if len(path) == size:
            if ends_ok(path[-1][1]):
                yield [ib for _, ib in path]
            return
        for nb in neighbours(path[-1][0]):
            if nb[0] in excluded or any(nb[0] == b for b, _ in path):
                continue
            yield from extend(path + [nb], size)

    for size in range(1, depth + 1):
        for node in first:
            if node[0] not in excluded:
                yield from extend([node], size)


def _locally_valid(seq, boundary, h, pos, count, scale, tol):
    try:
        vals = compute_intervals(seq, boundary, h)
    except DegeneracyError:
        return False
    eps = 1e-8 * scale
    if (vals.tau < -eps).any() or (vals.x < -eps).any() or (vals.q < -eps).any():
        return False
    for n in range(pos, pos + count):
        if vals.dtau[n] <= tol.ratio:
            return False
    if complementarity_violation(seq, vals.x, vals.q) > eps:
        return False
    zt = vals.tau <= eps
    if (vals.dtau[zt] < -tol.ratio).any():
        return False
    for val, der in ((vals.x, vals.dx), (vals.q, vals.dq)):
        z = val <= eps
        if (der[z] < -tol.ratio).any():
            return False
    return True


def _finish(data, T, seq, boundary, trace, rates):
    vals = compute_intervals(seq, boundary, T)
    t = np.concatenate([[0.0], np.cumsum(vals.tau)])
    t[-1] = T
    return SCLPSolution(
        T=T, breakpoints=t, tau=vals.tau, intervals=list(seq), x=vals.x, q=vals.q, boundary=boundary,
        objective=primal_objective(data, T, vals.tau, seq),
        dual_objective=dual_objective(data, T, vals.tau, seq, vals.q),
        trace=trace + [1.0], robust=getattr(rates, "robust", False),
    )


# -- optimality verification ----------------------------------------------------

@dataclass
class Check:
    passed: bool
    margin: float
    detail: str = ""

    def __post_init__(self):
        self.passed, self.margin = bool(self.passed), float(self.margin)


@dataclass
class OptimalityReport:
    checks: dict

    @property
    def ok(self):
        return all(c.passed for c in self.checks.values())

    def failed(self):
        return [name for name, c in self.checks.items() if not c.passed]

    def as_dict(self):
        return {name: {"passed": c.passed, "margin": c.margin, "detail": c.detail}
                for name, c in self.checks.items()}


def verify_optimality(data: SCLPData, solution: SCLPSolution, residual_tol=1e-8, state_tol=1e-9,
                      duality_tol=1e-8) -> OptimalityReport:
    """Check the sufficient optimality conditions of a basis-sequence solution.

    A robust solution obtained through the explicit counterpart is checked
    on that counterpart, plus agreement of the projected objective.
    """
    if solution.rc is not None:
        rc_data, rc_sol = solution.rc
        rep = verify_optimality(rc_data, rc_sol, residual_tol, state_tol, duality_tol)
        diff = abs(rc_sol.objective - solution.objective)
        rep.checks["projection"] = Check(diff <= duality_tol * max(1.0, abs(rc_sol.objective)), diff)
        return rep
    seq = solution.intervals
    bd = solution.boundary
    tau = np.asarray(solution.tau)
    checks = {}
    diffs = [len(a.basis ^ b.basis) for a, b in zip(seq, seq[1:])]
    linked = all(_adjacent(a, b) for a, b in zip(seq, seq[1:]))
    checks["adjacency"] = Check(linked, 0.0 if linked else 1.0, f"basis differences {diffs}")
    comp = bd.K0 <= seq[0].K and bd.J_end <= seq[-1].J
    checks["boundary_compatibility"] = Check(comp, 0.0 if comp else 1.0)
    checks["tau_positive"] = Check(bool((tau > 0).all()), float(tau.min()))
    xmin = float(solution.x.min(initial=0.0))
    qmin = float(solution.q.min(initial=0.0))
    checks["states_nonnegative"] = Check(min(xmin, qmin) >= -state_tol, min(xmin, qmin))

    # interval and state equations recomputed from the stored rates
    res = abs(tau.sum() - solution.T)
    x_re = bd.x0 + np.vstack([np.zeros(bd.x0.size),
                              np.cumsum(np.array([b.x_dot for b in seq]) * tau[:, None], axis=0)])
    qd = np.array([b.q_dot for b in seq]) * tau[:, None]
    q_re = bd.qN + np.vstack([np.cumsum(qd[::-1], axis=0)[::-1], np.zeros(bd.qN.size)])
    res = max(res, float(np.abs(x_re - solution.x).max()), float(np.abs(q_re - solution.q).max()))
    for n in range(len(seq) - 1):
        v = _leaving(seq[n], seq[n + 1])
        if v is None:
            continue
        kind, idx = v
        res = max(res, abs(x_re[n + 1, idx]) if kind == "x" else abs(q_re[n + 1, idx]))
    checks["equation_residuals"] = Check(res <= residual_tol, res)
    comp = complementarity_violation(seq, solution.x, solution.q)
    checks["pathwise_complementary"] = Check(comp <= residual_tol * max(1.0, solution.T), comp)

    worst = 0.0
    for ib in seq:
        if ib.extra.get("robust"):
            continue
        for j in range(ib.u.size):
            if j not in ib.J:
                worst = max(worst, -ib.u[j], abs(ib.q_dot[j]))
            else:
                worst = max(worst, abs(ib.u[j]))
        for k in range(ib.p.size):
            worst = max(worst, -ib.p[k] if k not in ib.K else abs(ib.p[k]))
    checks["rates_complementary"] = Check(worst <= 1e-7, worst)

    primal = primal_objective(data, solution.T, tau, seq)
    dual = dual_objective(data, solution.T, tau, seq, solution.q)
    gap = abs(primal - dual) / max(1.0, abs(primal))
    checks["strong_duality"] = Check(gap <= duality_tol, gap, f"primal {primal:.12g} dual {dual:.12g}")
    return OptimalityReport(checks)


# -- solution files -------------------------------------------------------------

def solution_to_dict(solution: SCLPSolution) -> dict:
    """Plain-JSON form; floats are left as Python floats for the writer to format."""
    def vec(a):
        return [float(v) for v in np.asarray(a).ravel()]

    bd = solution.boundary
    intervals = []
    for ib in solution.intervals:
        item = {"K": sorted(int(k) for k in ib.K), "J": sorted(int(j) for j in ib.J), "u": vec(ib.u),
                "x_dot": vec(ib.x_dot), "p": vec(ib.p), "q_dot": vec(ib.q_dot)}
        if "objective_rate" in ib.extra:
            item["objective_rate"] = float(ib.extra["objective_rate"])
        intervals.append(item)
    return {
        "T": float(solution.T),
        "breakpoints": vec(solution.breakpoints),
        "tau": vec(solution.tau),
        "intervals": intervals,
        "x": [vec(r) for r in solution.x],
        "q": [vec(r) for r in solution.q],
        "boundary": {"x0": vec(bd.x0), "qN": vec(bd.qN), "K0": sorted(int(k) for k in bd.K0),
                     "J_end": sorted(int(j) for j in bd.J_end)},
        "objective": float(solution.objective),
        "dual_objective": float(solution.dual_objective),
        "trace": vec(solution.trace),
        "robust": bool(solution.robust),
        "info": {k: v for k, v in solution.info.items() if isinstance(v, (bool, int, float, str))},
    }


def solution_from_dict(doc: dict) -> SCLPSolution:
    try:
        intervals = []
        for item in doc["intervals"]:
            extra = {}
            if "objective_rate" in item:
                extra = {"robust": True, "objective_rate": float(item["objective_rate"])}
            intervals.append(IntervalBasis(frozenset(item["K"]), frozenset(item["J"]), u=np.array(item["u"], float),
                                           x_dot=np.array(item["x_dot"], float), p=np.array(item["p"], float),
                                           q_dot=np.array(item["q_dot"], float), extra=extra))
        bd = doc["boundary"]
        boundary = BoundarySolution(np.array(bd["x0"], float), np.array(bd["qN"], float), frozenset(bd["K0"]),
                                    frozenset(bd["J_end"]))
        return SCLPSolution(T=float(doc["T"]), breakpoints=np.array(doc["breakpoints"], float),
                            tau=np.array(doc["tau"], float), intervals=intervals, x=np.array(doc["x"], float),
                            q=np.array(doc["q"], float), boundary=boundary, objective=float(doc["objective"]),
                            dual_objective=float(doc["dual_objective"]), trace=list(doc.get("trace", [])),
                            robust=bool(doc.get("robust", False)), info=dict(doc.get("info", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed solution file: {exc!r}") from exc
