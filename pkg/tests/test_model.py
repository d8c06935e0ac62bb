import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from robust_sclp.bench import random_network
from robust_sclp.errors import InvalidNetworkError
from robust_sclp.model import (FluidNetwork, SCLPData, build_matrices, load_network, network_from_dict,
                               network_to_dict, validate)

from conftest import drain


def test_drain_matrices():
    d = build_matrices(drain(mu_tilde=0.5))
    assert d.G.tolist() == [[1.0]]
    assert d.G_bar.tolist() == [[2.0]]
    assert d.G_tilde.tolist() == [[-0.5]]
    assert d.c_bar.tolist() == [2.0] and d.c_tilde.tolist() == [0.5]
    assert d.H.tolist() == [[1.0]] and d.b.tolist() == [1.0]


@given(st.integers(0, 10**6))
def test_matrix_identities(seed):
    net = random_network(seed)
    d = build_matrices(net)
    mu, dmu = net.mu_bar, net.mu_tilde
    np.testing.assert_allclose(d.G_bar, d.G * mu)
    np.testing.assert_allclose(d.G_tilde, -d.G * dmu)
    np.testing.assert_allclose(d.c, net.holding_cost @ d.G)
    # each flow drains its own buffer at full rate
    np.testing.assert_allclose(d.G[net.buffer, np.arange(net.J)], 1.0)
    assert (d.H.sum(axis=0) == 1).all()


@given(st.integers(0, 10**6))
def test_file_round_trip(seed):
    net = random_network(seed)
    doc = json.loads(json.dumps(network_to_dict(net)))
    assert network_from_dict(doc) == net


def test_load_network(fixtures_dir):
    net = load_network(fixtures_dir / "drain.json")
    assert net == drain()


def test_diagnostics_name_fields():
    doc = network_to_dict(drain())
    doc["flows"][0]["mu_bar"] = "fast"
    doc["flows"][0]["server"] = 9
    with pytest.raises(InvalidNetworkError) as err:
        network_from_dict(doc)
    text = str(err.value)
    assert "flows[0].mu_bar" in text and "flows[0].server" in text


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"servers": [')
    with pytest.raises(InvalidNetworkError, match="line 1"):
        load_network(path)


@pytest.mark.parametrize("change, needle", [
    ({"budget": [2.0]}, "budget"),
    ({"mu_tilde": [3.0]}, "exceeds"),
    ({"horizon": -1.0}, "horizon"),
    ({"alpha": [-1.0]}, "initial_level"),
])
def test_validate(change, needle):
    net = drain().replace(**change)
    assert any(needle in m for m in validate(net))
    with pytest.raises(InvalidNetworkError):
        build_matrices(net)


def test_routing_checks():
    net = FluidNetwork(1, 2, [0, 0], [0, 1], [1.0, 1.0], [0.0, 0.0], [[0.0, 0.7], [0.6, 0.0]], [1.0, 1.0],
                       [0.0, 0.0], [1.0, 1.0], [1.0])
    assert validate(net) == []
    bad = net.replace(routing=np.array([[0.5, 0.0], [0.6, 0.0]]))
    assert any("own buffer" in m for m in validate(bad))


def test_general_data_and_horizon():
    d = SCLPData.general([[1.0]], [[1.0]], [1.0], [1.0], [1.0], [0.0], 2.0)
    assert d.T == 2.0 and d.with_horizon(3.0).T == 3.0
    assert d.L == 0
    with pytest.raises(ValueError):
        SCLPData.general([[1.0]], [[1.0, 1.0]], [1.0], [1.0], [1.0], [0.0], 2.0)
