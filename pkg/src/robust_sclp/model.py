"""Fluid processing networks and their SCLP matrix data."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidNetworkError


@dataclass(frozen=True)
class FluidNetwork:
    """A multiclass fluid network with one-sided budgeted rate uncertainty.

    Flows are columns: flow ``j`` is served by ``server[j]``, drains
    ``buffer[j]`` and sends fraction ``routing[k, j]`` of its output to
    buffer ``k``.  Rates degrade as ``mu_bar - mu_tilde * xi`` with
    ``xi in [0, 1]`` and at most ``budget[i]`` total perturbation per server.
    """

    num_servers: int
    num_buffers: int
    server: np.ndarray
    buffer: np.ndarray
    mu_bar: np.ndarray
    mu_tilde: np.ndarray
    routing: np.ndarray
    alpha: np.ndarray
    input_rate: np.ndarray
    holding_cost: np.ndarray
    budget: np.ndarray
    horizon: float = 1.0
    processing_cost: np.ndarray | None = None
    server_ids: tuple = ()
    buffer_ids: tuple = ()
    flow_ids: tuple = ()

    def __post_init__(self):
        for name, dtype in (("server", int), ("buffer", int), ("mu_bar", float), ("mu_tilde", float),
                            ("alpha", float), ("input_rate", float), ("holding_cost", float),
                            ("budget", float)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=dtype).reshape(-1))
        J = self.server.size
        routing = np.asarray(self.routing, dtype=float)
        if routing.size == 0:
            routing = np.zeros((self.num_buffers, J))
        object.__setattr__(self, "routing", routing.reshape(self.num_buffers, J))
        h = np.zeros(J) if self.processing_cost is None else np.asarray(self.processing_cost, float)
        object.__setattr__(self, "processing_cost", h.reshape(-1))
        object.__setattr__(self, "horizon", float(self.horizon))
        if not self.server_ids:
            object.__setattr__(self, "server_ids", tuple(range(1, self.num_servers + 1)))
        if not self.buffer_ids:
            object.__setattr__(self, "buffer_ids", tuple(range(1, self.num_buffers + 1)))
        if not self.flow_ids:
            object.__setattr__(self, "flow_ids", tuple(range(1, J + 1)))
        for name in ("server", "buffer", "mu_bar", "mu_tilde", "alpha", "input_rate",
                     "holding_cost", "budget", "routing", "processing_cost"):
            getattr(self, name).flags.writeable = False

    @property
    def num_flows(self) -> int:
        return int(self.server.size)

    @property
    def I(self):  # noqa: E743
        return self.num_servers

    @property
    def K(self):
        return self.num_buffers

    @property
    def J(self):
        return self.num_flows

    def flows_of(self, i):
        return np.flatnonzero(self.server == i)

    def replace(self, **changes) -> "FluidNetwork":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return FluidNetwork(**kw)

    def nominal(self) -> "FluidNetwork":
        return self.replace(mu_tilde=np.zeros(self.num_flows))

    def __eq__(self, other):
        if not isinstance(other, FluidNetwork):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in self.__dataclass_fields__)

    __hash__ = None


def validate(network: FluidNetwork) -> list[str]:
    """Return one diagnostic per violated invariant; empty when valid."""
    out = []
    I, K, J = network.num_servers, network.num_buffers, network.num_flows
    fid = network.flow_ids
    if I < 1:
        out.append("num_servers must be at least 1")
    if K < 1:
        out.append("num_buffers must be at least 1")
    if J < 1:
        out.append("network has no flows")
    for name, size in (("buffer", J), ("mu_bar", J), ("mu_tilde", J), ("processing_cost", J),
                       ("alpha", K), ("input_rate", K), ("holding_cost", K), ("budget", I)):
        if getattr(network, name).size != size:
            out.append(f"{name} has length {getattr(network, name).size}, expected {size}")
    if out:
        return out
    if not np.isfinite(network.horizon) or network.horizon <= 0:
        out.append(f"horizon must be > 0, got {network.horizon}")
    for j in range(J):
        s, b = network.server[j], network.buffer[j]
        if not 0 <= s < I:
            out.append(f"server of flow {fid[j]} references unknown server index {s}")
        if not 0 <= b < K:
            out.append(f"buffer of flow {fid[j]} references unknown buffer index {b}")
        if not network.mu_bar[j] > 0:
            out.append(f"nominal_rate of flow {fid[j]} must be > 0, got {network.mu_bar[j]}")
        if network.mu_tilde[j] < 0:
            out.append(f"rate_deviation of flow {fid[j]} must be >= 0, got {network.mu_tilde[j]}")
        if network.mu_tilde[j] > network.mu_bar[j]:
            out.append(f"rate_deviation exceeds nominal_rate for flow {fid[j]}")
        col = network.routing[:, j]
        if (col < 0).any() or (col > 1).any():
            out.append(f"routing proportions of flow {fid[j]} must lie in [0, 1]")
        if col.sum() > 1 + 1e-12:
            out.append(f"routing proportions of flow {fid[j]} sum to {col.sum():.6g} > 1")
        if 0 <= b < K and col[b] != 0:
            out.append(f"routing of flow {fid[j]} feeds back into its own buffer {network.buffer_ids[b]}")
    for k in range(K):
        for name, label in (("alpha", "initial_level"), ("input_rate", "input_rate"),
                            ("holding_cost", "holding_cost")):
            v = getattr(network, name)[k]
            if not v >= 0:
                out.append(f"{label} of buffer {network.buffer_ids[k]} must be >= 0, got {v}")
    for i in range(I):
        n_i = int((network.server == i).sum())
        if n_i == 0:
            out.append(f"server {network.server_ids[i]} serves no flow")
        g = network.budget[i]
        if not 0 <= g <= n_i:
            out.append(f"budget of server {network.server_ids[i]} is {g}, must lie in [0, {n_i}] "
                       f"(number of flows it serves)")
    return out


def check(network: FluidNetwork) -> FluidNetwork:
    diags = validate(network)
    if diags:
        raise InvalidNetworkError(diags)
    return network


@dataclass(frozen=True)
class SCLPData:
    """Matrices of the separated continuous LP in its general form.

    ``G_bar``/``c_bar`` are the nominal (rate-scaled) data the solver works
    with; ``G_tilde``/``c_tilde`` carry the rate deviations.  ``F`` and ``d``
    describe extra state variables and are empty for networks.
    """

    G: np.ndarray
    G_bar: np.ndarray
    G_tilde: np.ndarray
    H: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c_bar: np.ndarray
    c_tilde: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    a: np.ndarray
    T: float
    F: np.ndarray = field(default=None)
    d: np.ndarray = field(default=None)
    server: np.ndarray | None = None
    budget: np.ndarray | None = None

    def __post_init__(self):
        K, J = np.shape(self.G)
        F = np.zeros((K, 0)) if self.F is None else np.asarray(self.F, float).reshape(K, -1)
        d = np.zeros(F.shape[1]) if self.d is None else np.asarray(self.d, float).reshape(-1)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "T", float(self.T))
        for name in ("G", "G_bar", "G_tilde", "H", "b", "c", "c_bar", "c_tilde", "gamma", "alpha", "a",
                     "F", "d"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.H.shape[1] != J or self.b.shape != (self.H.shape[0],):
            raise ValueError("H/b dimensions inconsistent with G")
        if d.shape != (F.shape[1],):
            raise ValueError("d must have one entry per column of F")

    @property
    def K(self):
        return self.G.shape[0]

    @property
    def J(self):
        return self.G.shape[1]

    @property
    def I(self):  # noqa: E743
        return self.H.shape[0]

    @property
    def L(self):
        return self.F.shape[1]

    @classmethod
    def general(cls, G, H, b, c, alpha, a, T, gamma=None, F=None, d=None) -> "SCLPData":
        """Certain SCLP data without rate scaling (``G_bar = G``, no deviations)."""
        G = np.asarray(G, float)
        c = np.asarray(c, float)
        J = G.shape[1]
        return cls(G=G, G_bar=G, G_tilde=np.zeros_like(G), H=np.asarray(H, float), b=b, c=c,
                   c_bar=c, c_tilde=np.zeros(J), gamma=np.zeros(J) if gamma is None else gamma,
                   alpha=alpha, a=a, T=T, F=F, d=d)

    def with_horizon(self, T) -> "SCLPData":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["T"] = T
        return SCLPData(**kw)


def build_matrices(network: FluidNetwork) -> SCLPData:
    check(network)
    K, J, I = network.num_buffers, network.num_flows, network.num_servers
    G = -network.routing.copy()
    G[network.buffer, np.arange(J)] = 1.0
    H = np.zeros((I, J))
    H[network.server, np.arange(J)] = 1.0
    c = network.holding_cost @ G
    mu, dmu = network.mu_bar, network.mu_tilde
    return SCLPData(
        G=G, G_bar=G * mu, G_tilde=-G * dmu, H=H, b=np.ones(I), c=c, c_bar=c * mu, c_tilde=c * dmu,
        gamma=np.zeros(J), alpha=network.alpha, a=network.input_rate, T=network.horizon,
        server=network.server.copy(), budget=network.budget.copy(),
    )


# -- problem files --------------------------------------------------------

def network_from_dict(doc: dict) -> FluidNetwork:
    """Parse the problem-file schema; raises ``InvalidNetworkError`` with field paths."""
    errors = []
    for key in ("servers", "buffers", "flows", "horizon"):
        if key not in doc:
            errors.append(f"missing top-level key '{key}'")
    if errors:
        raise InvalidNetworkError(errors)

    def num(obj, key, where, default=None):
        if key not in obj:
            if default is not None:
                return default
            errors.append(f"{where}: missing field '{key}'")
            return 0.0
        try:
            return float(obj[key])
        except (TypeError, ValueError):
            errors.append(f"{where}.{key}: expected a number, got {obj[key]!r}")
            return 0.0

    servers, buffers, flows = doc["servers"], doc["buffers"], doc["flows"]
    s_ids = [s.get("id", n + 1) for n, s in enumerate(servers)]
    b_ids = [b.get("id", n + 1) for n, b in enumerate(buffers)]
    s_pos = {sid: n for n, sid in enumerate(s_ids)}
    b_pos = {bid: n for n, bid in enumerate(b_ids)}
    if len(s_pos) != len(s_ids):
        errors.append("servers: duplicate id")
    if len(b_pos) != len(b_ids):
        errors.append("buffers: duplicate id")
    budget = [num(s, "budget", f"servers[{n}]", default=0.0) for n, s in enumerate(servers)]
    alpha = [num(b, "alpha", f"buffers[{n}]") for n, b in enumerate(buffers)]
    a = [num(b, "input_rate", f"buffers[{n}]", default=0.0) for n, b in enumerate(buffers)]
    g = [num(b, "holding_cost", f"buffers[{n}]") for n, b in enumerate(buffers)]
    K, J = len(buffers), len(flows)
    P = np.zeros((K, J))
    srv, buf, mu, dmu, h, f_ids = [], [], [], [], [], []
    for j, f in enumerate(flows):
        where = f"flows[{j}]"
        f_ids.append(f.get("id", j + 1))
        if f.get("server") not in s_pos:
            errors.append(f"{where}.server: unknown server id {f.get('server')!r}")
        if f.get("buffer") not in b_pos:
            errors.append(f"{where}.buffer: unknown buffer id {f.get('buffer')!r}")
        srv.append(s_pos.get(f.get("server"), 0))
        buf.append(b_pos.get(f.get("buffer"), 0))
        mu.append(num(f, "mu_bar", where))
        dmu.append(num(f, "mu_tilde", where, default=0.0))
        h.append(num(f, "processing_cost", where, default=0.0))
        for r, route in enumerate(f.get("routing", [])):
            if route.get("to") not in b_pos:
                errors.append(f"{where}.routing[{r}].to: unknown buffer id {route.get('to')!r}")
                continue
            P[b_pos[route["to"]], j] += num(route, "p", f"{where}.routing[{r}]")
    try:
        T = float(doc["horizon"])
    except (TypeError, ValueError):
        errors.append(f"horizon: expected a number, got {doc['horizon']!r}")
        T = 1.0
    if errors:
        raise InvalidNetworkError(errors)
    net = FluidNetwork(len(servers), K, srv, buf, mu, dmu, P, alpha, a, g, budget, T, h,
                       tuple(s_ids), tuple(b_ids), tuple(f_ids))
    return check(net)


def network_to_dict(network: FluidNetwork) -> dict:
    n = network
    flows = []
    for j in range(n.num_flows):
        routes = [{"to": n.buffer_ids[k], "p": float(n.routing[k, j])}
                  for k in np.flatnonzero(n.routing[:, j])]
        flow = {"id": n.flow_ids[j], "server": n.server_ids[n.server[j]],
                "buffer": n.buffer_ids[n.buffer[j]], "mu_bar": float(n.mu_bar[j]),
                "mu_tilde": float(n.mu_tilde[j]), "routing": routes}
        if n.processing_cost[j]:
            flow["processing_cost"] = float(n.processing_cost[j])
        flows.append(flow)
    return {
        "servers": [{"id": n.server_ids[i], "budget": float(n.budget[i])} for i in range(n.num_servers)],
        "buffers": [{"id": n.buffer_ids[k], "alpha": float(n.alpha[k]), "input_rate": float(n.input_rate[k]),
                     "holding_cost": float(n.holding_cost[k])} for k in range(n.num_buffers)],
        "flows": flows,
        "horizon": n.horizon,
    }


def load_network(path) -> FluidNetwork:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidNetworkError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(doc, dict):
        raise InvalidNetworkError([f"{path}: top level must be an object"])
    return network_from_dict(doc)
