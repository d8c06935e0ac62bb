import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robust_sclp.model import FluidNetwork

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


def drain(budget=0.5, mu_tilde=0.0, horizon=1.0):
    return FluidNetwork(1, 1, [0], [0], [2.0], [mu_tilde], np.zeros((1, 1)), [1.0], [0.0], [1.0], [budget], horizon)


def parallel_twins(horizon=3.0):
    """Two identical buffers on identical servers: both empty at the same instant."""
    return FluidNetwork(2, 2, [0, 1], [0, 1], [1.0, 1.0], [0.0, 0.0], np.zeros((2, 2)), [1.0, 1.0], [0.0, 0.0],
                        [1.0, 1.0], [1.0, 1.0], horizon)


def shared_twins(horizon=3.0):
    """Two identical buffers sharing one server."""
    return FluidNetwork(1, 2, [0, 0], [0, 1], [1.0, 1.0], [0.0, 0.0], np.zeros((2, 2)), [1.0, 1.0], [0.0, 0.0],
                        [1.0, 1.0], [1.0], horizon)


@pytest.fixture
def drain_net():
    return drain()


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def mixed_budget(net, rng):
    """Budgets drawn per server: whole numbers or fractions up to the flow count."""
    n = np.bincount(net.server, minlength=net.num_servers)
    frac = np.round(rng.uniform(0.0, 1.0, n.size) * n, 3)
    whole = rng.integers(0, n + 1)
    return net.replace(budget=np.where(rng.random(n.size) < 0.5, whole, frac).astype(float))


def rates_case(seed, feasible=False):
    """A random network with mixed budgets and a random sign pattern (K, J) for its Rates-LP."""
    from robust_sclp.bench import random_network

    rng = np.random.default_rng([seed, 7])
    I = int(rng.integers(1, 4))
    net = random_network(seed, I=I, K=int(rng.integers(max(I, 2), 7)))
    net = mixed_budget(net, rng)
    K = frozenset(np.flatnonzero(rng.random(net.K) < 0.7).tolist())
    J = frozenset(np.flatnonzero(rng.random(net.J + net.I) < 0.15).tolist())
    if feasible:
        # only flow controls are forced to zero, so eta = 0 stays feasible
        J = frozenset(j for j in J if j < net.J)
    return net, K, J


def highs_value(inst):
    """Optimal value of an LPInstance via HiGHS, or None when not optimal."""
    from scipy.optimize import linprog

    from robust_sclp.lp import Sign

    bounds = [(0, None) if s is Sign.NONNEG else (0, 0) if s is Sign.ZERO else (None, None) for s in inst.signs]
    c = -inst.objective if inst.sense == "max" else inst.objective
    r = linprog(c, A_eq=inst.A, b_eq=inst.rhs, bounds=bounds, method="highs")
    if r.status != 0:
        return r.status, None
    return 0, float(-r.fun if inst.sense == "max" else r.fun)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
