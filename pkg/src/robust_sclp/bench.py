"""Random no-routing instances and the reduction-size experiment."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import FluidNetwork, build_matrices
from .rc import dimension_report
from .robust import reduce

DEFAULT_THETAS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
DEFAULT_KAPPAS = (0.1, 0.25, 0.5, 0.75, 1.0)


@dataclass
class ExperimentConfig:
    iotas: tuple = tuple(range(1, 11))
    ms: tuple = tuple(range(1, 6))
    thetas: tuple = DEFAULT_THETAS
    kappas: tuple = DEFAULT_KAPPAS
    reps: int = 10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.iotas, self.ms = tuple(int(v) for v in self.iotas), tuple(int(v) for v in self.ms)
        self.thetas, self.kappas = tuple(float(v) for v in self.thetas), tuple(float(v) for v in self.kappas)
        if any(not 0 < t <= 1 for t in self.thetas):
            raise ValueError("theta must lie in (0, 1]")
        if any(not 0 <= k <= 1 for k in self.kappas):
            raise ValueError("kappa must lie in [0, 1]")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if any(v < 1 for v in self.iotas + self.ms):
            raise ValueError("iota and m must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment field(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class Structure:
    """Random layout shared by every (theta, kappa) of one replicate.

    ``order[:, j]`` lists the candidate input buffers of flow ``j`` (its
    own buffer excluded) in random order and ``u[j]`` fixes the quantile of
    its input count, so input sets are nested as theta grows.
    """

    I: int
    K: int
    server: np.ndarray
    order: np.ndarray  # (K - 1) x J
    u: np.ndarray
    seed: int = 0
    rates: dict = field(default_factory=dict)

    def input_counts(self, theta):
        top = max(1, math.ceil(theta * self.K - 1e-12))
        n = 1 + np.floor(self.u * top).astype(int)
        return np.minimum(n, self.K - 1)

    def inputs(self, theta):
        n = self.input_counts(theta)
        return [self.order[: n[j], j] for j in range(self.K)]

    def budget(self, kappa):
        return kappa * np.bincount(self.server, minlength=self.I)


def structure(iota: int, m: int, seed) -> Structure:
    rng = np.random.default_rng(seed)
    I = 10 * iota
    K = 2 * m * I
    server = np.concatenate([np.arange(I), rng.integers(0, I, K - I)])
    rng.shuffle(server)
    # column j: the other buffers in random order
    keys = rng.random((K, K))
    np.fill_diagonal(keys, np.inf)
    order = np.argsort(keys, axis=0)[: K - 1]
    u = rng.random(K)
    rates = {"mu_bar": rng.uniform(1.0, 3.0, K), "dev": rng.uniform(0.1, 0.5, K),
             "alpha": rng.uniform(0.5, 3.0, K), "a": rng.uniform(0.0, 0.3, K), "g": rng.uniform(0.5, 2.0, K)}
    return Structure(I, K, server, order, u, int(np.atleast_1d(seed)[-1]), rates)


def generate_random(iota: int, m: int, theta: float, kappa: float, seed=0, horizon=1.0) -> FluidNetwork:
    """A no-routing network whose flows carry uncertain inflow terms.

    Flow ``j`` drains buffer ``j``.  Its ``n`` input buffers get a small
    synthetic inflow ``1 / (n + 1)`` each, which puts a positive rate
    deviation on exactly those rows; the nominal drain stays dominant.
    """
    st = structure(iota, m, seed)
    return network_from_structure(st, theta, kappa, horizon)


def network_from_structure(st: Structure, theta, kappa, horizon=1.0) -> FluidNetwork:
    K = st.K
    P = np.zeros((K, K))
    for j, ks in enumerate(st.inputs(theta)):
        P[ks, j] = 1.0 / (ks.size + 1)
    r = st.rates
    return FluidNetwork(st.I, K, st.server, np.arange(K), r["mu_bar"], r["dev"] * r["mu_bar"], P,
                        r["alpha"], r["a"], r["g"], st.budget(kappa), horizon)


def random_network(seed=0, I=None, K=None, horizon=4.0, routing_prob=0.6, budget=None) -> FluidNetwork:
    """A general random network with one flow per buffer.

    Each flow routes to one random buffer with probability ``routing_prob``.
    ``budget`` defaults to one unit per server.
    """
    rng = np.random.default_rng(seed)
    I = I or int(rng.integers(1, 5))
    K = K or int(rng.integers(max(I, 2), 9))
    if K < I:
        raise ValueError("every server needs a flow: K must be at least I")
    server = np.concatenate([np.arange(I), rng.integers(0, I, K - I)])
    rng.shuffle(server)
    P = np.zeros((K, K))
    for j in range(K):
        if rng.random() < routing_prob:
            k = int(rng.integers(K))
            if k != j:
                P[k, j] = rng.uniform(0.3, 1.0)
    mu = rng.uniform(1, 3, K)
    return FluidNetwork(I, K, server, np.arange(K), mu, rng.uniform(0, 0.5, K) * mu, P, rng.uniform(0.5, 3, K),
                        rng.uniform(0, 0.3, K), rng.uniform(0.5, 2, K),
                        np.ones(I) if budget is None else np.broadcast_to(budget, (I,)).astype(float), horizon)


def block_counts(st: Structure, theta) -> np.ndarray:
    """``c[k, i]``: flows of server ``i`` with uncertain inflow into buffer ``k``."""
    c = np.zeros((st.K, st.I), dtype=np.int64)
    for j, ks in enumerate(st.inputs(theta)):
        c[ks, st.server[j]] += 1
    return c


def reduction_from_counts(c: np.ndarray, budget: np.ndarray, K: int, I: int) -> float:
    """Relative reduction from block counts; a block is absorbed when its budget covers it."""
    live = (c > 0) & (c > budget[None, :])
    after = int((live * (1 + c)).sum())
    return 100.0 * (1.0 - after / (K * (K + I)))


def reduction_reference(net: FluidNetwork) -> float:
    """Relative reduction through the library's reduce and dimension_report."""
    data = build_matrices(net)
    rep = dimension_report(data, reduce(data, objective_uncertainty=False), objective_uncertainty=False)
    return rep.relative_reduction


def _replicate(args):
    iota, m, rep, seed, thetas, kappas = args
    st = structure(iota, m, [seed, iota, m, rep])
    out = np.empty((len(thetas), len(kappas)))
    for a, th in enumerate(thetas):
        c = block_counts(st, th)
        for b, ka in enumerate(kappas):
            out[a, b] = reduction_from_counts(c, st.budget(ka), st.K, st.I)
    return iota, m, rep, out


def replicate_seed(config: ExperimentConfig, iota, m, rep):
    return [config.seed, iota, m, rep]


@dataclass
class ReductionRow:
    iota: int
    m: int
    theta: float
    kappa: float
    rep_count: int
    mean_R: float
    std_R: float


def reduction_experiment(config: ExperimentConfig) -> list[ReductionRow]:
    """Mean relative reduction per (iota, m, theta, kappa) grid point.

    Replicate ``rep`` of ``(iota, m)`` is seeded with
    ``[seed, iota, m, rep]`` and reused across theta and kappa.
    """
    jobs = [(io, m, r, config.seed, config.thetas, config.kappas)
            for io in config.iotas for m in config.ms for r in range(config.reps)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_replicate, jobs, chunksize=4))
    else:
        results = [_replicate(j) for j in jobs]
    acc = {}
    for io, m, _, out in results:
        acc.setdefault((io, m), []).append(out)
    rows = []
    for (io, m), outs in sorted(acc.items()):
        arr = np.stack(outs)
        mean, std = arr.mean(axis=0), arr.std(axis=0, ddof=1) if len(outs) > 1 else np.zeros(arr.shape[1:])
        for a, th in enumerate(config.thetas):
            for b, ka in enumerate(config.kappas):
                rows.append(ReductionRow(io, m, th, ka, len(outs), float(mean[a, b]), float(std[a, b])))
    return rows


def summarize(rows, by=("theta", "kappa")) -> dict:
    """Average ``mean_R`` over all other grid axes."""
    acc = {}
    for r in rows:
        acc.setdefault(tuple(getattr(r, f) for f in by), []).append(r.mean_R)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


def trend_report(rows, noise=1.0) -> dict:
    """Range and monotonicity of mean R, checked within every (iota, m) slice."""
    inc = dec = -np.inf
    for (io, m), _ in summarize(rows, ("iota", "m")).items():
        sub = {(r.theta, r.kappa): r.mean_R for r in rows if r.iota == io and r.m == m}
        thetas = sorted({k[0] for k in sub})
        kappas = sorted({k[1] for k in sub})
        vals = np.array([[sub[(t, k)] for k in kappas] for t in thetas])
        if len(thetas) > 1:
            inc = max(inc, float(np.diff(vals, axis=0).max()))
        if len(kappas) > 1:
            dec = max(dec, float((-np.diff(vals, axis=1)).max()))
    s = summarize(rows)
    t0, k1 = min(k[0] for k in s), max(k[1] for k in s)
    means = [r.mean_R for r in rows]
    return {
        "min_R": float(min(means)),
        "max_R": float(max(means)),
        "worst_theta_increase": inc,
        "worst_kappa_decrease": dec,
        "full_budget_small_theta": s[(t0, k1)],
        "noise": noise,
        "ok": bool(50.0 <= min(means) and max(means) <= 100.0 and inc <= noise and dec <= noise),
    }


def to_csv(rows, stream=None) -> str:
    buf = stream or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iota", "m", "theta", "kappa", "rep_count", "mean_R", "std_R"])
    for r in rows:
        w.writerow([r.iota, r.m, f"{r.theta:.17g}", f"{r.kappa:.17g}", r.rep_count, f"{r.mean_R:.17g}",
                    f"{r.std_R:.17g}"])
    return buf.getvalue() if stream is None else ""
