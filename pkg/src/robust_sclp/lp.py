"""Dense simplex kernel for sign-restricted equality-form LPs.

Every variable carries one of three sign tags: free, nonnegative, or fixed
at zero.  Free variables are handled natively (never split), so the basis
of a solve is a set of original columns; the SCLP layer depends on that to
read off which states and controls are basic.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import SingularBasisError


class Sign(enum.Enum):
    FREE = "free"
    NONNEG = "nonneg"
    ZERO = "zero"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9
    optimality: float = 1e-9
    pivot: float = 1e-10
    # a rate/ratio counts as negative only below -ratio
    ratio: float = 1e-10
    refactor_every: int = 50
    # Bland's rule after bland_factor * m consecutive degenerate pivots
    bland_factor: int = 3

    def as_dict(self):
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


TOLERANCES = Tolerances()


@dataclass(frozen=True)
class LPInstance:
    """``max/min objective @ x  s.t.  A @ x == rhs`` with per-variable signs."""

    A: np.ndarray
    rhs: np.ndarray
    objective: np.ndarray
    sense: str = "max"
    signs: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        if A.size == 0:
            A = A.reshape(len(np.atleast_1d(self.rhs)), len(np.atleast_1d(self.objective)))
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        obj = np.asarray(self.objective, dtype=float).reshape(-1)
        m, n = A.shape
        if rhs.shape != (m,) or obj.shape != (n,):
            raise ValueError(f"inconsistent LP dimensions: A {A.shape}, rhs {rhs.shape}, objective {obj.shape}")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        signs = tuple(Sign(s) for s in self.signs) if self.signs else (Sign.NONNEG,) * n
        if len(signs) != n:
            raise ValueError(f"sign pattern has length {len(signs)}, expected {n}")
        if self.names and len(self.names) != n:
            raise ValueError("names must cover every column")
        for arr in (A, rhs, obj):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class LPBasis:
    """Ordered basic column indices plus the matrix they index into."""

    indices: tuple
    A: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def as_set(self):
        return frozenset(self.indices)

    def factor(self):
        if self.A is None:
            raise ValueError("basis has no matrix attached")
        return _lu_or_raise(self.A[:, list(self.indices)])


def _lu_or_raise(Bmat):
    if Bmat.shape[0] != Bmat.shape[1]:
        raise SingularBasisError(f"basis matrix is {Bmat.shape}, not square")
    if Bmat.shape[0] == 0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(Bmat, check_finite=False)
    diag = np.abs(np.diag(lu))
    scale = max(1.0, np.abs(Bmat).max())
    if diag.min() <= 1e-11 * scale:
        raise SingularBasisError("basis matrix is numerically singular")
    return lu, piv


def pivot(basis: LPBasis, entering: int, leaving: int) -> LPBasis:
    """Swap one basic column for a nonbasic one; raises if the result is singular."""
    idx = list(basis.indices)
    if entering in idx:
        raise ValueError(f"column {entering} is already basic")
    if leaving not in idx:
        raise ValueError(f"column {leaving} is not basic")
    idx[idx.index(leaving)] = entering
    new = LPBasis(tuple(idx), basis.A)
    if basis.A is not None:
        new.factor()
    return new


@dataclass
class LPResult:
    status: Status
    instance: LPInstance
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: LPBasis | None = None
    objective: float = float("nan")
    iterations: int = 0
    rank_deficient: bool = False
    pivots: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    @property
    def dual_objective(self):
        return float(self.instance.rhs @ self.duals)


# internal column kinds
_FREE, _NONNEG, _ZERO, _ART = 0, 1, 2, 3
_KIND = {Sign.FREE: _FREE, Sign.NONNEG: _NONNEG, Sign.ZERO: _ZERO}


class _Simplex:
    """Revised primal/dual simplex on min-form data with an explicit inverse."""

    def __init__(self, inst: LPInstance, tol: Tolerances):
        self.inst = inst
        self.tol = tol
        m, n = inst.A.shape
        self.m, self.n = m, n
        self.b = inst.rhs.copy()
        sgn = np.where(self.b >= 0, 1.0, -1.0)
        self.art_sign = sgn
        self.A = np.hstack([inst.A, np.diag(sgn)]) if m else inst.A.copy()
        self.kind = np.array([_KIND[s] for s in inst.signs] + [_ART] * m, dtype=int)
        c = -inst.objective if inst.sense == "max" else inst.objective.copy()
        self.cost = np.concatenate([c, np.zeros(m)])
        self.cost1 = np.concatenate([np.zeros(n), np.ones(m)])
        self.scale = max(1.0, float(np.abs(self.b).max()) if m else 1.0)
        self.feas = tol.feasibility * self.scale
        self.B: list[int] = []
        self.Binv = None
        self.xB = None
        self.updates = 0
        self.iterations = 0
        self.max_iter = 50 * (m + n) + 1000
        self.phase = 1
        self.trace: list[tuple[int, int]] = []

    # -- factorization -----------------------------------------------------
    def refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            self.xB = np.zeros(0)
            return
        Bmat = self.A[:, self.B]
        lu = _lu_or_raise(Bmat)
        self.Binv = scipy.linalg.lu_solve(lu, np.eye(self.m), check_finite=False)
        self.xB = self.Binv @ self.b
        self.updates = 0

    def _update(self, r, j, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.trace.append((j, self.B[r]))
        self.B[r] = j
        self.updates += 1
        self.iterations += 1
        if self.updates >= self.tol.refactor_every:
            self.refactor()

    def duals(self, cost):
        return cost[self.B] @ self.Binv if self.m else np.zeros(0)

    def reduced(self, cost):
        y = self.duals(cost)
        return cost - y @ self.A, y

    # -- primal simplex ----------------------------------------------------
    def primal(self, cost):
        tol = self.tol
        m = self.m
        degenerate = 0
        bland = False
        while True:
            if self.iterations > self.max_iter:
                raise RuntimeError("simplex iteration cap exceeded")
            d, _ = self.reduced(cost)
            basic = np.zeros(self.A.shape[1], dtype=bool)
            basic[self.B] = True
            kind = self.kind
            score = np.zeros_like(d)
            nn = (~basic) & (kind == _NONNEG)
            score[nn] = np.where(d[nn] < -tol.optimality, -d[nn], 0.0)
            fr = (~basic) & (kind == _FREE)
            score[fr] = np.where(np.abs(d[fr]) > tol.optimality, np.abs(d[fr]), 0.0)
            if self.phase == 1:
                art = (~basic) & (kind == _ART)
                score[art] = np.where(d[art] < -tol.optimality, -d[art], 0.0)
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return Status.OPTIMAL
            j = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.Binv @ self.A[:, j]
            r, t = self._ratio(alpha * direction, bland)
            if r is None:
                return Status.UNBOUNDED
            self.xB = self.xB - t * direction * alpha
            self.xB[r] = t * direction
            self._update(r, j, alpha)
            if t <= self.feas:
                degenerate += 1
                if degenerate > tol.bland_factor * max(m, 1):
                    bland = True
            else:
                degenerate = 0

    def _ratio(self, dalpha, bland):
        """Blocking row for x_B - t * dalpha, t >= 0; returns (row, step)."""
        piv = self.tol.pivot
        kinds = self.kind[self.B]
        fixed = (kinds == _ART) & (self.phase == 2)
        bounded = (kinds == _NONNEG) | ((kinds == _ART) & (self.phase == 1))
        ratios = np.full(self.m, np.inf)
        blk = bounded & (dalpha > piv)
        ratios[blk] = np.maximum(self.xB[blk], 0.0) / dalpha[blk]
        fblk = fixed & (np.abs(dalpha) > piv)
        ratios[fblk] = 0.0
        if not np.isfinite(ratios).any():
            return None, None
        tmin = ratios.min()
        ties = np.flatnonzero(ratios <= tmin + 1e-12 * max(1.0, tmin))
        if bland:
            Bidx = np.asarray(self.B)[ties]
            r = int(ties[np.argmin(Bidx)])
        else:
            r = int(ties[np.argmax(np.abs(dalpha[ties]))])
        return r, float(ratios[r])

    # -- dual simplex ------------------------------------------------------
    def dual_feasible(self, cost):
        d, _ = self.reduced(cost)
        basic = np.zeros(self.A.shape[1], dtype=bool)
        basic[self.B] = True
        nb = ~basic
        opt = self.tol.optimality * 10
        ok_nn = np.all(d[nb & (self.kind == _NONNEG)] >= -opt)
        ok_fr = np.all(np.abs(d[nb & (self.kind == _FREE)]) <= opt)
        return bool(ok_nn and ok_fr)

    def primal_feasible(self):
        kinds = self.kind[self.B]
        x = self.xB
        bad_nn = (kinds == _NONNEG) & (x < -self.feas)
        bad_art = (kinds == _ART) & (np.abs(x) > self.feas)
        return not (bad_nn.any() or bad_art.any())

    def dual(self, cost):
        tol = self.tol
        degenerate = 0
        bland = False
        while True:
            if self.iterations > self.max_iter:
                raise RuntimeError("dual simplex iteration cap exceeded")
            kinds = self.kind[self.B]
            infeas = np.zeros(self.m)
            nn = kinds == _NONNEG
            infeas[nn] = np.where(self.xB[nn] < -self.feas, -self.xB[nn], 0.0)
            art = kinds == _ART
            infeas[art] = np.where(np.abs(self.xB[art]) > self.feas, np.abs(self.xB[art]), 0.0)
            rows = np.flatnonzero(infeas > 0)
            if rows.size == 0:
                return Status.OPTIMAL
            if bland:
                r = int(rows[np.argmin(np.asarray(self.B)[rows])])
            else:
                r = int(rows[np.argmax(infeas[rows])])
            d, _ = self.reduced(cost)
            rowr = self.Binv[r] @ self.A
            basic = np.zeros(self.A.shape[1], dtype=bool)
            basic[self.B] = True
            # x_r(theta) = x_r - theta * rowr_j; need x_r to move toward 0
            need_up = self.xB[r] < 0
            s = -1.0 if need_up else 1.0  # required sign of rowr_j for theta > 0
            ratios = np.full(self.A.shape[1], np.inf)
            nnj = (~basic) & (self.kind == _NONNEG) & (s * rowr > tol.pivot)
            ratios[nnj] = np.maximum(d[nnj], 0.0) / np.abs(rowr[nnj])
            frj = (~basic) & (self.kind == _FREE) & (np.abs(rowr) > tol.pivot)
            ratios[frj] = np.abs(d[frj]) / np.abs(rowr[frj])
            if not np.isfinite(ratios).any():
                return Status.INFEASIBLE
            tmin = ratios.min()
            ties = np.flatnonzero(ratios <= tmin + 1e-12 * max(1.0, tmin))
            if bland:
                j = int(ties[0])
            else:
                j = int(ties[np.argmax(np.abs(rowr[ties]))])
            alpha = self.Binv @ self.A[:, j]
            theta = self.xB[r] / alpha[r]
            self.xB = self.xB - theta * alpha
            self.xB[r] = theta
            self._update(r, j, alpha)
            if tmin <= tol.optimality:
                degenerate += 1
                if degenerate > tol.bland_factor * max(self.m, 1):
                    bland = True
            else:
                degenerate = 0

    # -- driver pieces -----------------------------------------------------
    def cold_start(self):
        self.B = list(range(self.n, self.n + self.m))
        self.Binv = np.diag(self.art_sign)
        self.xB = np.abs(self.b)
        self.phase = 1

    def drive_out_artificials(self):
        """Pivot zero-level artificials out; prefer free columns."""
        deficient = False
        for r in range(self.m):
            if self.kind[self.B[r]] != _ART:
                continue
            row = self.Binv[r] @ self.A[:, : self.n]
            mag = np.abs(row)
            basic = np.zeros(self.n, dtype=bool)
            basic[[b for b in self.B if b < self.n]] = True
            ok = (~basic) & (self.kind[: self.n] != _ZERO) & (mag > 1e-7)
            if not ok.any():
                deficient = True
                continue
            free_ok = ok & (self.kind[: self.n] == _FREE)
            pool = free_ok if free_ok.any() else ok
            j = int(np.flatnonzero(pool)[np.argmax(mag[pool])])
            alpha = self.Binv @ self.A[:, j]
            theta = self.xB[r] / alpha[r]
            self.xB = self.xB - theta * alpha
            self.xB[r] = theta
            self._update(r, j, alpha)
        return deficient

    def enter_free(self, cost):
        """Bring nonbasic free columns with zero reduced cost into the basis."""
        piv = 1e-7
        for j in np.flatnonzero(self.kind[: self.n] == _FREE):
            if j in self.B:
                continue
            alpha = self.Binv @ self.A[:, j]
            kinds = self.kind[self.B]
            cand = (kinds != _FREE) & (np.abs(alpha) > piv)
            if not cand.any():
                continue
            # prefer a degenerate row (basic at zero): keeps the primal point
            zero_rows = cand & (np.abs(self.xB) <= self.feas)
            if zero_rows.any():
                rows = np.flatnonzero(zero_rows)
                r = int(rows[np.argmax(np.abs(alpha[rows]))])
                theta = self.xB[r] / alpha[r]
            else:
                best = None
                for direction in (1.0, -1.0):
                    r, t = self._ratio(alpha * direction, False)
                    if r is not None and (best is None or t < best[1]):
                        best = (r, t, direction)
                if best is None:
                    continue
                r, t, direction = best
                theta = t * direction
            self.xB = self.xB - theta * alpha
            self.xB[r] = theta
            self._update(r, j, alpha)
        return self.primal(cost)


def solve(instance: LPInstance, warm: LPBasis | Sequence[int] | None = None,
          tol: Tolerances = TOLERANCES) -> LPResult:
    """Solve an LP, optionally warm-starting from a basis.

    A primal-feasible warm basis goes straight to primal phase 2; a
    dual-feasible one is repaired with the dual simplex; anything else falls
    back to a two-phase cold start.
    """
    S = _Simplex(instance, tol)
    m, n = S.m, S.n
    status = None
    started = False
    if warm is not None:
        idx = list(warm.indices if isinstance(warm, LPBasis) else warm)
        if (len(idx) == m and len(set(idx)) == m and all(0 <= i < n for i in idx)
                and all(S.kind[i] != _ZERO for i in idx)):
            S.B = idx
            try:
                S.refactor()
                started = True
            except SingularBasisError:
                started = False
        if started:
            S.phase = 2
            if S.primal_feasible():
                status = S.primal(S.cost)
            elif S.dual_feasible(S.cost):
                status = S.dual(S.cost)
                if status is Status.OPTIMAL:
                    status = S.primal(S.cost)
            else:
                started = False
    deficient = False
    if not started:
        S.iterations = 0
        S.trace = []
        S.cold_start()
        if m:
            st = S.primal(S.cost1)
            if st is not Status.OPTIMAL:  # pragma: no cover - phase 1 is bounded
                raise RuntimeError("phase 1 did not terminate optimally")
            S.refactor()
            if float(S.cost1[S.B] @ S.xB) > S.feas * max(1, m):
                return LPResult(Status.INFEASIBLE, instance, iterations=S.iterations)
            deficient = S.drive_out_artificials()
        S.phase = 2
        status = S.primal(S.cost)
    if status is Status.OPTIMAL:
        status = S.enter_free(S.cost)
    if status is Status.UNBOUNDED:
        return LPResult(Status.UNBOUNDED, instance, iterations=S.iterations)
    if status is Status.INFEASIBLE:
        return LPResult(Status.INFEASIBLE, instance, iterations=S.iterations)
    if m:
        S.refactor()
    return _package(S, instance, deficient)


def _package(S: _Simplex, instance: LPInstance, deficient: bool) -> LPResult:
    n = S.n
    x = np.zeros(n)
    for r, b in enumerate(S.B):
        if b < n:
            x[b] = S.xB[r]
    for j, s in enumerate(instance.signs):
        if s is Sign.ZERO:
            x[j] = 0.0
    d_min, y_min = S.reduced(S.cost)
    flip = -1.0 if instance.sense == "max" else 1.0
    y = flip * y_min
    d = flip * d_min[:n]
    for b in S.B:
        if b < n:
            d[b] = 0.0
    return LPResult(
        Status.OPTIMAL, instance, x=x, duals=y, reduced_costs=d,
        basis=LPBasis(tuple(S.B), instance.A if all(b < n for b in S.B) else None),
        objective=float(instance.objective @ x), iterations=S.iterations,
        rank_deficient=deficient, pivots=list(S.trace),
    )


def basic_solution(instance: LPInstance, indices, tol: Tolerances = TOLERANCES) -> LPResult | None:
    """The basic solution of ``indices`` if it is optimal, else None.

    Used to test a prescribed basis without letting the simplex choose among
    alternative optimal bases of a degenerate LP.
    """
    idx = [int(i) for i in indices]
    m, n = instance.A.shape
    if len(idx) != m or len(set(idx)) != m:
        return None
    if any(instance.signs[i] is Sign.ZERO for i in idx):
        return None
    try:
        lu = _lu_or_raise(instance.A[:, idx])
    except SingularBasisError:
        return None
    x = np.zeros(n)
    y = np.zeros(m)
    if m:
        x[idx] = scipy.linalg.lu_solve(lu, instance.rhs, check_finite=False)
        y = scipy.linalg.lu_solve(lu, instance.objective[idx], trans=1, check_finite=False)
    d = instance.objective - instance.A.T @ y
    d[idx] = 0.0
    scale = max(1.0, np.abs(x).max(initial=0.0))
    dscale = max(1.0, np.abs(y).max(initial=0.0))
    flip = 1.0 if instance.sense == "max" else -1.0
    basic = set(idx)
    for j, sgn in enumerate(instance.signs):
        if j in basic:
            if sgn is Sign.NONNEG and x[j] < -tol.feasibility * scale:
                return None
        elif sgn is Sign.NONNEG and flip * d[j] > tol.optimality * dscale:
            return None
        elif sgn is Sign.FREE and abs(d[j]) > tol.optimality * dscale:
            return None
    return LPResult(Status.OPTIMAL, instance, x=x, duals=y, reduced_costs=d, basis=LPBasis(tuple(idx), instance.A),
                    objective=float(instance.objective @ x))


def add_row(instance: LPInstance, basis: LPBasis | Sequence[int] | None, new_row,
            new_rhs: float, sense: str = "<=", tol: Tolerances = TOLERANCES) -> LPResult:
    """Append ``new_row @ x (<=|>=) new_rhs`` and re-optimize from ``basis``.

    The new slack column goes last and enters the warm basis, so a basis that
    was optimal stays dual feasible and the dual simplex restores primal
    feasibility.  The augmented instance is ``result.instance``.
    """
    augmented = augment(instance, new_row, new_rhs, sense)
    warm = None
    if basis is not None:
        idx = list(basis.indices if isinstance(basis, LPBasis) else basis)
        warm = idx + [instance.A.shape[1]]
    return solve(augmented, warm, tol)


def augment(instance: LPInstance, new_row, new_rhs: float, sense: str = "<=") -> LPInstance:
    if sense not in ("<=", ">="):
        raise ValueError("sense must be '<=' or '>='")
    m, n = instance.A.shape
    row = np.asarray(new_row, dtype=float).reshape(-1)
    if row.shape != (n,):
        raise ValueError(f"new row has length {row.size}, expected {n}")
    slack = 1.0 if sense == "<=" else -1.0
    A = np.zeros((m + 1, n + 1))
    A[:m, :n] = instance.A
    A[m, :n] = row
    A[m, n] = slack
    names = instance.names + (f"slack_{m}",) if instance.names else ()
    return LPInstance(A, np.append(instance.rhs, new_rhs), np.append(instance.objective, 0.0),
                      instance.sense, instance.signs + (Sign.NONNEG,), names)


def check_optimality(result: LPResult, tol: float = 1e-9) -> dict:
    """Primal/dual residuals of an optimal result, scaled as the kernel promises."""
    inst = result.instance
    x, y, d = result.x, result.duals, result.reduced_costs
    scale = 1.0 + np.linalg.norm(inst.rhs, np.inf)
    primal_res = float(np.abs(inst.A @ x - inst.rhs).max(initial=0.0)) / scale
    recomputed = inst.objective - inst.A.T @ y
    dual_res = float(np.abs(recomputed - d).max(initial=0.0))
    flip = 1.0 if inst.sense == "max" else -1.0
    sign_viol = 0.0
    dual_viol = 0.0
    cs = 0.0
    for j, s in enumerate(inst.signs):
        if s is Sign.NONNEG:
            sign_viol = max(sign_viol, -x[j])
            dual_viol = max(dual_viol, flip * d[j])
            cs = max(cs, abs(d[j] * x[j]))
        elif s is Sign.FREE:
            dual_viol = max(dual_viol, abs(d[j]))
        else:
            sign_viol = max(sign_viol, abs(x[j]))
    gap = abs(result.objective - result.dual_objective) / max(1.0, abs(result.objective))
    return {
        "primal_residual": primal_res,
        "dual_residual": dual_res,
        "sign_violation": sign_viol,
        "dual_violation": dual_viol,
        "complementarity": cs,
        "duality_gap": gap,
        "ok": max(primal_res, dual_res, sign_viol, dual_viol, cs) <= tol and gap <= 1e-8,
    }


def dump_instance(instance: LPInstance, stream) -> None:
    """Write a plain-text matrix dump for cross-checking with other tools."""
    m, n = instance.A.shape
    stream.write(f"# sense {instance.sense}\n# rows {m} cols {n}\n")
    stream.write("signs " + " ".join(s.value for s in instance.signs) + "\n")
    if instance.names:
        stream.write("names " + " ".join(instance.names) + "\n")
    stream.write("objective " + " ".join(f"{v:.17g}" for v in instance.objective) + "\n")
    for i in range(m):
        stream.write(" ".join(f"{v:.17g}" for v in instance.A[i]) + f" = {instance.rhs[i]:.17g}\n")
