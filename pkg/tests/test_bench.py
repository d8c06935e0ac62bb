import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from robust_sclp.bench import (ExperimentConfig, block_counts, generate_random, network_from_structure,
                               reduction_experiment, reduction_from_counts, reduction_reference, structure, summarize,
                               to_csv, trend_report)
from robust_sclp.model import validate


@given(st.integers(1, 2), st.integers(1, 3), st.floats(0.01, 1.0), st.floats(0.0, 1.0), st.integers(0, 999))
def test_counts_match_library_reduction(iota, m, theta, kappa, seed):
    st_ = structure(iota, m, seed)
    fast = reduction_from_counts(block_counts(st_, theta), st_.budget(kappa), st_.K, st_.I)
    net = network_from_structure(st_, theta, kappa)
    assert validate(net) == []
    assert fast == pytest.approx(reduction_reference(net), abs=1e-9)


@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 999))
def test_inputs_nested_in_theta(iota, m, seed):
    st_ = structure(iota, m, seed)
    prev = st_.inputs(0.05)
    for theta in (0.2, 0.5, 0.9):
        cur = st_.inputs(theta)
        for a, b in zip(prev, cur):
            assert set(a) <= set(b)
        prev = cur


def test_shape_of_generated_network():
    net = generate_random(2, 3, 0.3, 0.5, seed=1)
    assert net.I == 20 and net.K == 120
    assert set(np.bincount(net.server, minlength=net.I)) - {0} == set(np.bincount(net.server))
    assert (net.routing.sum(axis=0) < 1).all()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(thetas=(0.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(kappas=(1.5,))
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"iotas": [1], "colour": "red"})
    assert ExperimentConfig.from_dict({"iotas": [1, 2]}).iotas == (1, 2)


def test_experiment_rows_and_csv():
    cfg = ExperimentConfig(iotas=(1,), ms=(1, 2), thetas=(0.1, 0.5), kappas=(0.5, 1.0), reps=3)
    rows = reduction_experiment(cfg)
    assert len(rows) == 2 * 2 * 2
    assert all(r.rep_count == 3 for r in rows)
    assert rows == reduction_experiment(cfg)
    text = to_csv(rows)
    assert text.splitlines()[0] == "iota,m,theta,kappa,rep_count,mean_R,std_R"
    assert len(text.splitlines()) == 9
    s = summarize(rows)
    assert set(s) == {(t, k) for t in cfg.thetas for k in cfg.kappas}
    rep = trend_report(rows)
    assert rep["min_R"] <= rep["max_R"] <= 100.0


def test_parallel_matches_serial():
    cfg = ExperimentConfig(iotas=(1,), ms=(1,), thetas=(0.2,), kappas=(0.5,), reps=4)
    par = ExperimentConfig(iotas=(1,), ms=(1,), thetas=(0.2,), kappas=(0.5,), reps=4, workers=2)
    assert reduction_experiment(cfg) == reduction_experiment(par)
