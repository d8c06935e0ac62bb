"""Explicit robust counterparts, used as oracles, and dimension accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lp import LPInstance, Sign, dump_instance
from .model import SCLPData
from .robust import ReducedProblem, identity_reduction


@dataclass
class RCProblem:
    """A robust counterpart with a symbol name for every column and row."""

    kind: str
    problem: object  # SCLPData or LPInstance
    columns: list
    rows: list
    blocks: dict | None = None

    def index(self, name):
        return self.columns.index(name)

    def export(self, matrix_stream, sidecar_path=None):
        inst = self.problem
        if isinstance(inst, SCLPData):
            inst = LPInstance(np.vstack([inst.G_bar, inst.H]), np.concatenate([inst.a, inst.b]), inst.c_bar, "max")
        dump_instance(inst, matrix_stream)
        if sidecar_path is not None:
            with open(sidecar_path, "w") as fh:
                json.dump({"kind": self.kind, "columns": self.columns, "rows": self.rows}, fh, indent=1)


def _flows_by_server(server, I):
    return [np.flatnonzero(server == i) for i in range(I)]


# -- SCLP-form robust counterpart ---------------------------------------------

def build_sclp_rc(data: SCLPData, reduced: ReducedProblem | None = None, objective_uncertainty=True,
                  budget_margin: float = 0.0) -> RCProblem:
    """The robust counterpart as an SCLP whose extra unknowns are controls.

    Controls are ``(eta, beta, gamma, beta0, gamma0)``.  Each state row gains
    ``Gamma_i beta_{k,i} + sum_j gamma_{k,j}``, each uncertain block adds
    rows ``G_tilde_kj eta_j - beta_{k,i} - gamma_{k,j} <= 0`` and the
    objective pays ``Gamma_i beta0_i + sum_j gamma0_j``.  With ``reduced``
    only the residual blocks are kept and absorbed terms move into the
    nominal data.

    ``budget_margin > 0`` charges ``beta`` at ``(1 + margin) Gamma_i``.  This
    is conservative and removes the flat range of ``beta`` that integer
    budgets create.
    """
    red = reduced if reduced is not None else identity_reduction(data, objective_uncertainty)
    full = reduced is None
    K, J, I = data.K, data.J, data.I
    server, budget = red.server, red.budget
    by_server = _flows_by_server(server, I)
    blocks = []  # (k, i, flows); k = -1 for the objective
    for k in list(range(K)) + [-1]:
        for i in range(I):
            if full:
                if k < 0 and not objective_uncertainty:
                    continue
                flows = by_server[i]
            else:
                R = red.residual_objective if k < 0 else red.residual[k]
                flows = np.array(sorted(set(by_server[i].tolist()) & R), dtype=int)
            if flows.size:
                blocks.append((k, i, flows))
    ncols = J + sum(1 + f.size for _, _, f in blocks)
    G = np.zeros((K, ncols))
    c = np.zeros(ncols)
    G[:, :J] = red.G_star
    c[:J] = red.c_star
    H_rows = [np.concatenate([data.H, np.zeros((I, ncols - J))], axis=1)]
    b = [data.b]
    columns = [f"eta[{j}]" for j in range(J)]
    rows = [f"state[{k}]" for k in range(K)] + [f"capacity[{i}]" for i in range(I)]
    col = J
    block_index = {}
    for k, i, flows in blocks:
        tag = "0" if k < 0 else str(k)
        bcol = col
        columns.append(f"beta[{tag},{i}]")
        gcols = list(range(col + 1, col + 1 + flows.size))
        columns += [f"gamma[{tag},{i},{j}]" for j in flows]
        block_index[(k, i)] = (bcol, dict(zip(flows.tolist(), gcols)))
        if k >= 0:
            G[k, bcol] = budget[i] * (1.0 + budget_margin)
            G[k, gcols] = 1.0
            dev = red.G_tilde[k]
        else:
            c[bcol] = -budget[i] * (1.0 + budget_margin)
            c[gcols] = -1.0
            dev = red.c_tilde
        rows_blk = np.zeros((flows.size, ncols))
        for r, (j, gc) in enumerate(zip(flows, gcols)):
            rows_blk[r, j] = dev[j]
            rows_blk[r, bcol] = -1.0
            rows_blk[r, gc] = -1.0
            rows.append(f"block[{tag},{i},{j}]")
        H_rows.append(rows_blk)
        b.append(np.zeros(flows.size))
        col += 1 + flows.size
    H = np.vstack(H_rows)
    sclp = SCLPData(G=G, G_bar=G, G_tilde=np.zeros_like(G), H=H, b=np.concatenate(b), c=c, c_bar=c,
                    c_tilde=np.zeros(ncols), gamma=np.zeros(ncols), alpha=data.alpha, a=data.a, T=data.T)
    return RCProblem("sclp", sclp, columns, rows, block_index)


# -- Rates-LP robust counterpart and its dual ---------------------------------

@dataclass
class RatesRC:
    primal: LPInstance
    dual: LPInstance
    primal_columns: list
    dual_columns: list
    layout: dict


def build_rates_rc(data: SCLPData, K, J, objective_uncertainty=True) -> RatesRC:
    """The robust Rates-LP(K, J) as an explicit LP, and its dual.

    Primal columns: eta (J), s (I), beta (K x I), gamma (K x J), beta0 (I),
    gamma0 (J), v (K x J), r (J), xdot (K).  Dual columns: p (K),
    q_dot (J + I), delta (K x J), delta0 (J), y (K x J), y0 (J),
    omega (K x I), omega0 (I).
    """
    K, J = frozenset(K), frozenset(J)
    nK, nJ, nI = data.K, data.J, data.I
    server = np.asarray(data.server)
    budget = np.asarray(data.budget, float)
    Gt = data.G_tilde
    ct = data.c_tilde if objective_uncertainty else np.zeros(nJ)

    sizes = [("eta", nJ), ("s", nI), ("beta", nK * nI), ("gamma", nK * nJ), ("beta0", nI), ("gamma0", nJ),
             ("v", nK * nJ), ("r", nJ), ("xdot", nK)]
    off, pos = {}, 0
    for name, n in sizes:
        off[name] = pos
        pos += n
    n = pos
    m = nK + nK * nJ + nJ + nI
    A = np.zeros((m, n))
    rhs = np.zeros(m)
    obj = np.zeros(n)
    obj[off["eta"]:off["eta"] + nJ] = data.c_bar
    obj[off["beta0"]:off["beta0"] + nI] = -budget
    obj[off["gamma0"]:off["gamma0"] + nJ] = -1.0
    for k in range(nK):
        A[k, off["eta"]:off["eta"] + nJ] = data.G_bar[k]
        A[k, off["beta"] + k * nI:off["beta"] + (k + 1) * nI] = budget
        A[k, off["gamma"] + k * nJ:off["gamma"] + (k + 1) * nJ] = 1.0
        A[k, off["xdot"] + k] = 1.0
        rhs[k] = data.a[k]
        for j in range(nJ):
            r = nK + k * nJ + j
            A[r, off["beta"] + k * nI + server[j]] = 1.0
            A[r, off["gamma"] + k * nJ + j] = 1.0
            A[r, off["eta"] + j] = -Gt[k, j]
            A[r, off["v"] + k * nJ + j] = -1.0
    for j in range(nJ):
        r = nK + nK * nJ + j
        A[r, off["beta0"] + server[j]] = 1.0
        A[r, off["gamma0"] + j] = 1.0
        A[r, off["eta"] + j] = -ct[j]
        A[r, off["r"] + j] = -1.0
    for i in range(nI):
        r = nK + nK * nJ + nJ + i
        A[r, off["eta"]:off["eta"] + nJ] = data.H[i]
        A[r, off["s"] + i] = 1.0
        rhs[r] = data.b[i]
    signs = [Sign.NONNEG] * n
    for j in range(nJ + nI):
        if j in J:
            signs[j] = Sign.ZERO
    for k in range(nK):
        if k in K:
            signs[off["xdot"] + k] = Sign.FREE
    pcols = ([f"eta[{j}]" for j in range(nJ)] + [f"s[{i}]" for i in range(nI)]
             + [f"beta[{k},{i}]" for k in range(nK) for i in range(nI)]
             + [f"gamma[{k},{j}]" for k in range(nK) for j in range(nJ)]
             + [f"beta0[{i}]" for i in range(nI)] + [f"gamma0[{j}]" for j in range(nJ)]
             + [f"v[{k},{j}]" for k in range(nK) for j in range(nJ)] + [f"r[{j}]" for j in range(nJ)]
             + [f"xdot[{k}]" for k in range(nK)])
    primal = LPInstance(A, rhs, obj, "max", tuple(signs), tuple(pcols))

    dsizes = [("p", nK), ("q_dot", nJ + nI), ("delta", nK * nJ), ("delta0", nJ), ("y", nK * nJ), ("y0", nJ),
              ("omega", nK * nI), ("omega0", nI)]
    doff, pos = {}, 0
    for name, sz in dsizes:
        doff[name] = pos
        pos += sz
    dn = pos
    dm = nJ + nK * nJ + nJ + nK * nI + nI
    D = np.zeros((dm, dn))
    drhs = np.zeros(dm)
    dobj = np.zeros(dn)
    dobj[doff["p"]:doff["p"] + nK] = data.a
    dobj[doff["q_dot"] + nJ:doff["q_dot"] + nJ + nI] = data.b
    for j in range(nJ):
        D[j, doff["p"]:doff["p"] + nK] = data.G_bar[:, j]
        for k in range(nK):
            D[j, doff["delta"] + k * nJ + j] = Gt[k, j]
        D[j, doff["delta0"] + j] = ct[j]
        D[j, doff["q_dot"] + nJ:doff["q_dot"] + nJ + nI] = data.H[:, j]
        D[j, doff["q_dot"] + j] = -1.0
        drhs[j] = data.c_bar[j]
    for k in range(nK):
        for j in range(nJ):
            r = nJ + k * nJ + j
            D[r, doff["p"] + k] = 1.0
            D[r, doff["delta"] + k * nJ + j] = -1.0
            D[r, doff["y"] + k * nJ + j] = -1.0
    for j in range(nJ):
        r = nJ + nK * nJ + j
        D[r, doff["delta0"] + j] = 1.0
        D[r, doff["y0"] + j] = 1.0
        drhs[r] = 1.0
    for k in range(nK):
        for i in range(nI):
            r = nJ + nK * nJ + nJ + k * nI + i
            D[r, doff["p"] + k] = budget[i]
            for j in np.flatnonzero(server == i):
                D[r, doff["delta"] + k * nJ + j] = -1.0
            D[r, doff["omega"] + k * nI + i] = -1.0
    for i in range(nI):
        r = nJ + nK * nJ + nJ + nK * nI + i
        for j in np.flatnonzero(server == i):
            D[r, doff["delta0"] + j] = 1.0
        D[r, doff["omega0"] + i] = 1.0
        drhs[r] = budget[i]
    dsigns = [Sign.NONNEG] * dn
    for k in range(nK):
        if k in K:
            dsigns[doff["p"] + k] = Sign.ZERO
    for j in range(nJ + nI):
        if j in J:
            dsigns[doff["q_dot"] + j] = Sign.FREE
    dcols = ([f"p[{k}]" for k in range(nK)] + [f"q_dot[{j}]" for j in range(nJ + nI)]
             + [f"delta[{k},{j}]" for k in range(nK) for j in range(nJ)] + [f"delta0[{j}]" for j in range(nJ)]
             + [f"y[{k},{j}]" for k in range(nK) for j in range(nJ)] + [f"y0[{j}]" for j in range(nJ)]
             + [f"omega[{k},{i}]" for k in range(nK) for i in range(nI)] + [f"omega0[{i}]" for i in range(nI)])
    dual = LPInstance(D, drhs, dobj, "min", tuple(dsigns), tuple(dcols))
    return RatesRC(primal, dual, pcols, dcols, {"primal": off, "dual": doff})


def pack_dual(rc: RatesRC, mapped) -> np.ndarray:
    """Lay mapped dual values out in the column order of ``rc.dual``."""
    o = rc.layout["dual"]
    z = np.zeros(rc.dual.A.shape[1])
    for name, arr in (("p", mapped.p), ("q_dot", mapped.q_dot), ("delta", mapped.delta), ("delta0", mapped.delta0),
                      ("y", mapped.y), ("y0", mapped.y0), ("omega", mapped.omega), ("omega0", mapped.omega0)):
        flat = np.ravel(arr)
        z[o[name]:o[name] + flat.size] = flat
    return z


def pack_primal(rc: RatesRC, sol) -> np.ndarray:
    """Lay a robust Rates-LP solution and its certificates out in ``rc.primal`` order."""
    o = rc.layout["primal"]
    cert = sol.certificates
    z = np.zeros(rc.primal.A.shape[1])
    nJI = sol.eta.size
    z[:nJI] = sol.eta
    for name, arr in (("beta", cert.beta), ("gamma", cert.gamma), ("beta0", cert.beta0), ("gamma0", cert.gamma0),
                      ("v", cert.v), ("r", cert.r), ("xdot", sol.x_dot)):
        flat = np.ravel(arr)
        z[o[name]:o[name] + flat.size] = flat
    return z


def lp_residual(inst: LPInstance, z: np.ndarray) -> float:
    """Largest equality or sign violation of ``z`` for ``inst``."""
    r = float(np.abs(inst.A @ z - inst.rhs).max(initial=0.0))
    for j, s in enumerate(inst.signs):
        if s is Sign.NONNEG:
            r = max(r, -z[j])
        elif s is Sign.ZERO:
            r = max(r, abs(z[j]))
    return r


# -- dimension accounting ------------------------------------------------------

@dataclass
class DimensionReport:
    state_form_count: int  # (K+1)(J+I)+1
    no_routing_count: int  # K(K+I)
    before: int
    after: int

    @property
    def relative_reduction(self):
        return 100.0 * (1.0 - self.after / self.before) if self.before else 0.0

    def as_dict(self):
        return {"state_form_count": self.state_form_count, "no_routing_count": self.no_routing_count,
                "before": self.before, "after": self.after, "relative_reduction": self.relative_reduction}


def dimension_report(data: SCLPData, reduced: ReducedProblem | None = None,
                     objective_uncertainty: bool = False) -> DimensionReport:
    """Additional-variable counts of the robust counterpart before and after reduction.

    ``before`` counts one ``beta`` per (row, server) pair and one ``gamma``
    per (row, flow); ``after`` counts the same for the residual blocks only.
    The objective row is included when ``objective_uncertainty`` is set.
    """
    K, J, I = data.K, data.J, data.I
    server = np.asarray(data.server)
    rows = K + (1 if objective_uncertainty else 0)
    before = rows * (I + J)
    after = before
    if reduced is not None:
        after = 0
        sets = list(reduced.residual) + ([reduced.residual_objective] if objective_uncertainty else [])
        for R in sets:
            for i in range(I):
                n = sum(1 for j in R if server[j] == i)
                if n:
                    after += 1 + n
    return DimensionReport((K + 1) * (J + I) + 1, K * (K + I), before, after)
