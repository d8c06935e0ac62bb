import json

import pytest

from robust_sclp.cli import dumps, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_solve_drain(capsys, fixtures_dir, tmp_path):
    out = tmp_path / "sol.json"
    code, cap = run(capsys, "solve", fixtures_dir / "drain.json", "--out", out)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["objective"] == pytest.approx(0.75, abs=1e-12)
    man = json.loads((tmp_path / "sol.json.manifest.json").read_text())
    assert man["command"] == "solve" and man["outputs"] == [str(out)] and man["seed"] == 0


def test_horizon_flag_and_config(capsys, fixtures_dir, tmp_path):
    code, cap = run(capsys, "solve", fixtures_dir / "drain.json", "--horizon", 0.5)
    assert code == 0 and json.loads(cap.out)["objective"] == pytest.approx(0.25, abs=1e-12)
    conf = tmp_path / "c.json"
    conf.write_text('{"horizon": 0.5}')
    code, cap = run(capsys, "solve", fixtures_dir / "drain.json", "--config", conf)
    assert json.loads(cap.out)["objective"] == pytest.approx(0.25, abs=1e-12)
    # flags beat the config file
    code, cap = run(capsys, "solve", fixtures_dir / "drain.json", "--config", conf, "--horizon", 1.0)
    assert json.loads(cap.out)["objective"] == pytest.approx(0.75, abs=1e-12)


def test_malformed_input(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"servers": [')
    code, cap = run(capsys, "solve", bad)
    assert code == 2 and "line 1" in cap.err
    bad.write_text('{"servers": [], "buffers": [], "flows": [{"server": 3}], "horizon": 1}')
    code, cap = run(capsys, "solve", bad)
    assert code == 2 and "flows[0]" in cap.err


def test_degenerate_exit_code(capsys, tmp_path):
    from robust_sclp.model import network_to_dict

    from conftest import parallel_twins

    path = tmp_path / "twins.json"
    path.write_text(json.dumps(network_to_dict(parallel_twins())))
    code, cap = run(capsys, "solve", path)
    assert code == 3 and "tied set" in cap.err


def test_robust_equals_nominal_without_deviation(capsys, fixtures_dir):
    _, a = run(capsys, "solve", fixtures_dir / "drain.json")
    code, b = run(capsys, "solve-robust", fixtures_dir / "drain.json")
    assert code == 0
    a, b = json.loads(a.out), json.loads(b.out)
    assert a["objective"] == b["objective"] and a["breakpoints"] == b["breakpoints"]
    assert "cuts" in b and "rc_certificates" in b


def test_pipeline(capsys, tmp_path):
    conf = tmp_path / "gen.json"
    conf.write_text('{"kind": "random", "I": 2, "K": 3}')
    net, sol = tmp_path / "net.json", tmp_path / "sol.json"
    assert run(capsys, "generate", "--config", conf, "--seed", 4, "--out", net)[0] == 0
    assert run(capsys, "solve-robust", net, "--out", sol)[0] == 0
    code, cap = run(capsys, "verify", net, sol)
    assert code == 0 and json.loads(cap.out)["ok"]
    code, cap = run(capsys, "audit", net, sol, "--samples", 200)
    assert json.loads(cap.out)["max_violation"] <= 1e-7
    code, cap = run(capsys, "oracle", net, "--steps", 50, "--robust")
    assert json.loads(cap.out)["objective"] <= json.loads(sol.read_text())["objective"] + 1e-7
    code, cap = run(capsys, "reduce", net)
    assert json.loads(cap.out)["before"] == 3 * (3 + 2)


def test_bench_reduction_csv(capsys, tmp_path):
    conf = tmp_path / "b.json"
    conf.write_text('{"iotas": [1], "ms": [1], "thetas": [0.1], "kappas": [1.0], "reps": 2}')
    out = tmp_path / "r.csv"
    assert run(capsys, "bench-reduction", "--config", conf, "--out", out)[0] == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("1,1,0.10000000000000001,1,2,")
    bad = tmp_path / "bad.json"
    bad.write_text('{"reps": 0}')
    assert run(capsys, "bench-reduction", "--config", bad)[0] == 2


def test_dumps_format():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(-0.0) == "0"
    assert json.loads(dumps({"a": [1.5, 2], "b": {"c": True, "d": None}})) == {"a": [1.5, 2], "b": {"c": True, "d": None}}
