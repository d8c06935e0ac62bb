"""Independent checks: time discretization, brute-force inner maximization, audits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import LPFailure
from .model import SCLPData

MAX_DISCRETE_SIZE = 5_000_000
MAX_ENUMERATION = 20
AUTO_SIMPLEX_LIMIT = 30_000


@dataclass(frozen=True)
class DiscretizationGrid:
    T: float
    n_steps: int
    n_controls: int
    n_states: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def dt(self):
        return self.T / self.n_steps

    @property
    def nodes(self):
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def u_slice(self, n):
        """Columns of the controls on step ``n`` (0-based)."""
        start = n * self.n_controls
        return slice(start, start + self.n_controls)

    def x_slice(self, n):
        """Columns of the states at node ``n + 1``."""
        start = self.n_steps * self.n_controls + n * self.n_states
        return slice(start, start + self.n_states)

    @property
    def size(self):
        return self.n_steps * (self.n_controls + self.n_states)


@dataclass
class DiscretizedLP:
    """Sparse LP (maximize) for piecewise-constant controls on a uniform grid."""

    grid: DiscretizationGrid
    objective: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    lower: np.ndarray

    def solve(self, method="auto", tol=1e-10):
        """Solve with HiGHS (simplex, exact vertex) or Clarabel (interior point).

        ``auto`` picks HiGHS for small grids and Clarabel for large ones,
        where the long state recursion makes simplex pivoting slow.  ``tol``
        sets the interior-point gap and feasibility tolerances.
        """
        if method == "auto":
            method = "highs" if self.objective.size <= AUTO_SIMPLEX_LIMIT else "clarabel"
        if method == "highs":
            z, obj = self._solve_highs()
        elif method == "clarabel":
            z, obj = self._solve_clarabel(tol)
        else:
            raise ValueError(f"unknown method {method!r}")
        g = self.grid
        u = z[: g.n_steps * g.n_controls].reshape(g.n_steps, g.n_controls)
        x = z[g.n_steps * g.n_controls:].reshape(g.n_steps, g.n_states)
        return DiscreteSolution(obj, u, x, g)

    def _solve_highs(self):
        res = linprog(-self.objective, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=np.column_stack([self.lower, np.full(self.lower.size, np.inf)]),
                      method="highs")
        if res.status != 0:
            raise LPFailure(res.status, f"discretized LP: {res.message}")
        return res.x, float(-res.fun)

    def _solve_clarabel(self, tol):
        import clarabel

        n = self.objective.size
        finite = np.flatnonzero(np.isfinite(self.lower))
        bound_rows = sp.csr_matrix((-np.ones(finite.size), (np.arange(finite.size), finite)),
                                   shape=(finite.size, n))
        A = sp.vstack([self.A_eq, self.A_ub, bound_rows]).tocsc()
        b = np.concatenate([self.b_eq, self.b_ub, -self.lower[finite]])
        cones = [clarabel.ZeroConeT(self.A_eq.shape[0]),
                 clarabel.NonnegativeConeT(self.A_ub.shape[0] + finite.size)]
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = tol
        sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), -self.objective, A, b, cones, settings).solve()
        if str(sol.status) not in ("Solved", "AlmostSolved"):
            raise LPFailure(str(sol.status), "discretized LP (interior point)")
        z = np.asarray(sol.x)
        return z, float(self.objective @ z)


@dataclass
class DiscreteSolution:
    objective: float
    u: np.ndarray
    x: np.ndarray
    grid: DiscretizationGrid


def discretize(data: SCLPData, n_steps: int, G=None, c=None, lower=None) -> DiscretizedLP:
    """Discretize the SCLP with ``n_steps`` equal steps.

    Controls are constant per step and states are constrained at the grid
    nodes; since states are linear in between, every feasible point is
    feasible for the continuous problem and the optimum is a lower bound.
    ``lower`` gives per-control lower bounds (default 0, ``-inf`` for free).
    """
    if data.L:
        raise NotImplementedError("discretization covers problems without extra states (L = 0)")
    G = data.G_bar if G is None else np.asarray(G, float)
    c = data.c_bar if c is None else np.asarray(c, float)
    K, J = G.shape
    grid = DiscretizationGrid(data.T, int(n_steps), J, K)
    if grid.size > MAX_DISCRETE_SIZE:
        raise ValueError(f"discretized LP too large ({grid.size} variables)")
    N, dt = grid.n_steps, grid.dt
    mid = (np.arange(N) + 0.5) * dt
    obj = np.concatenate([np.kron((data.T - mid) * dt, c) + np.kron(np.full(N, dt), data.gamma),
                          np.zeros(N * K)])
    # x^n - x^{n-1} + G u^n dt = a dt, with x^0 = alpha
    Gu = sp.kron(sp.identity(N), sp.csr_matrix(G * dt))
    D = sp.identity(N) - sp.eye(N, k=-1)
    Dx = sp.kron(D, sp.identity(K))
    A_eq = sp.hstack([Gu, Dx]).tocsr()
    b_eq = np.tile(data.a * dt, N)
    b_eq[:K] += data.alpha
    A_ub = sp.hstack([sp.kron(sp.identity(N), sp.csr_matrix(data.H)),
                      sp.csr_matrix((N * data.I, N * K))]).tocsr()
    b_ub = np.tile(data.b, N)
    lo = np.zeros(J) if lower is None else np.asarray(lower, float)
    lower_all = np.concatenate([np.tile(lo, N), np.zeros(N * K)])
    return DiscretizedLP(grid, obj, A_eq, b_eq, A_ub, b_ub, lower_all)


def discrete_optimum(data: SCLPData, n_steps: int, method="auto", tol=1e-10, **kw) -> float:
    return discretize(data, n_steps, **kw).solve(method, tol).objective


# -- inner maximization by enumeration ----------------------------------------

def _server_max(w, budget):
    """max w.xi over {xi in [0,1]^n, sum xi <= budget} by enumerating vertices."""
    w = w[w > 0]
    n = w.size
    if n == 0 or budget <= 0:
        return 0.0, 0, None
    if n > MAX_ENUMERATION:
        raise ValueError(f"eligible set of {n} entries exceeds the enumeration limit {MAX_ENUMERATION}")
    whole = math.floor(budget)
    frac = budget - whole
    best, best_mask, best_extra = 0.0, 0, None
    chunk = 1 << 14
    bits = 1 << np.arange(n)
    for lo in range(0, 1 << n, chunk):
        masks = np.arange(lo, min(lo + chunk, 1 << n))
        sel = (masks[:, None] & bits) > 0
        count = sel.sum(axis=1)
        keep = count <= whole
        sel, masks, count = sel[keep], masks[keep], count[keep]
        if masks.size == 0:
            continue
        vals = sel @ w
        extra = np.full(masks.size, -1)
        if frac > 0:
            full = count == whole
            rest = np.where(sel, -np.inf, w)
            arg = rest.argmax(axis=1)
            gain = frac * rest[np.arange(masks.size), arg]
            add = full & np.isfinite(gain) & (gain > 0)
            vals = vals + np.where(add, gain, 0.0)
            extra = np.where(add, arg, -1)
        i = int(vals.argmax())
        if vals[i] > best:
            best, best_mask, best_extra = float(vals[i]), int(masks[i]), int(extra[i])
    return best, best_mask, best_extra


def enumerate_inner_max(row, eta, budget, server, return_xi=False):
    """Worst-case value of ``sum_j row_j eta_j xi_j`` over per-server budget sets.

    ``budget[i]`` bounds the total perturbation of the flows with
    ``server == i``.  Only entries with positive weight can contribute, so the
    vertices are enumerated on those.
    """
    w = np.asarray(row, float) * np.asarray(eta, float)
    server = np.asarray(server)
    budget = np.asarray(budget, float)
    total = 0.0
    xi = np.zeros(w.size)
    for i in range(budget.size):
        flows = np.flatnonzero(server == i)
        pos = flows[w[flows] > 0]
        val, mask, extra = _server_max(w[flows], budget[i])
        total += val
        if return_xi and pos.size:
            for b in range(pos.size):
                if mask >> b & 1:
                    xi[pos[b]] = 1.0
            if extra is not None and extra >= 0:
                xi[pos[extra]] = budget[i] - math.floor(budget[i])
    return (total, xi) if return_xi else total


# -- Monte-Carlo robust feasibility audit -------------------------------------

@dataclass
class AuditReport:
    n_samples: int
    seed: int
    max_state_violation: float
    state_violation_sample: int | None
    state_violation_time: float | None
    state_violation_buffer: int | None
    max_capacity_violation: float
    capacity_violation_time: float | None

    @property
    def max_violation(self):
        return max(self.max_state_violation, self.max_capacity_violation)

    def as_dict(self):
        return {
            "n_samples": self.n_samples, "seed": self.seed,
            "state": {"max_violation": self.max_state_violation, "sample_seed": self.state_violation_sample,
                      "time": self.state_violation_time, "buffer": self.state_violation_buffer},
            "capacity": {"max_violation": self.max_capacity_violation, "time": self.capacity_violation_time},
        }


def _sample_polytope(rng, flows_by_server, budget, J):
    xi = np.zeros(J)
    for i, flows in enumerate(flows_by_server):
        n = flows.size
        if n == 0:
            continue
        g = min(budget[i], n)
        whole = int(math.floor(g))
        pick = rng.permutation(flows)
        xi[pick[:whole]] = 1.0
        if whole < n:
            xi[pick[whole]] = g - whole
    return xi


def audit_feasibility(data: SCLPData, solution, n_samples=10_000, seed=0) -> AuditReport:
    """Integrate the solution's controls under sampled rate realizations.

    Each sample draws a piecewise-constant perturbation aligned with the
    solution's intervals: a budget-polytope vertex (50%), the worst case for
    a random buffer (10%) or a scaled vertex (40%).  Sample ``s`` uses the
    generator seeded with ``(seed, s)``.
    """
    K, J = data.K, data.J
    server = np.asarray(data.server)
    budget = np.asarray(data.budget, float)
    flows_by_server = [np.flatnonzero(server == i) for i in range(budget.size)]
    eta = np.array([ib.u[:J] for ib in solution.intervals])
    tau = np.asarray(solution.tau)
    t = np.asarray(solution.breakpoints)
    nominal = eta @ data.G_bar.T  # per-interval outflow rates
    worst_rows = [np.array([enumerate_inner_max(data.G_tilde[k], e, budget, server, True)[1]
                            for e in eta]) for k in range(K)]
    best = (0.0, None, None, None)
    for s in range(n_samples):
        rng = np.random.default_rng([seed, s])
        kind = rng.random()
        if kind < 0.5:
            xi = np.array([_sample_polytope(rng, flows_by_server, budget, J) for _ in tau])
        elif kind < 0.6:
            xi = worst_rows[int(rng.integers(K))]
        else:
            xi = np.array([_sample_polytope(rng, flows_by_server, budget, J) for _ in tau])
            xi *= rng.random((tau.size, 1))
        rates = data.a - nominal - (eta * xi) @ data.G_tilde.T
        x = data.alpha + np.vstack([np.zeros(K), np.cumsum(rates * tau[:, None], axis=0)])
        viol = -x.min()
        if viol > best[0]:
            n, k = np.unravel_index(int(x.argmin()), x.shape)
            best = (float(viol), s, float(t[n]), int(k))
    cap = eta @ data.H.T - data.b
    cap_v = float(max(cap.max(initial=0.0), 0.0))
    cap_t = float(t[int(cap.max(axis=1).argmax())]) if cap_v > 0 else None
    return AuditReport(n_samples, seed, best[0], best[1], best[2], best[3], cap_v, cap_t)
