import json
from dataclasses import replace

import numpy as np
import pytest

from conftest import unit_directions
from lagreach import cli
from lagreach.errors import ConfigInvalid
from lagreach.geometry import HPolytope, from_dict, support_many, to_dict
from lagreach.reach import load_tube
from lagreach.scenarios import (
    ScenarioConfig,
    chain_config,
    double_integrator_config,
    load_config,
    make_scenarios,
    write_config,
)


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("scenarios")
    make_scenarios(d)
    return d


@pytest.fixture(scope="module")
def di_run(scenario_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("di")
    code = cli.main(["run", "--scenario", str(scenario_dir / "double_integrator.json"),
                     "--out", str(out), "--quiet"])
    return code, out


# --- scenario files -------------------------------------------------------

def test_make_scenarios_round_trip(scenario_dir):
    names = sorted(p.name for p in scenario_dir.iterdir())
    assert names == ["chain.json", "cwh.json", "double_integrator.json"]
    for p in scenario_dir.iterdir():
        cfg = load_config(p)
        assert ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_make_scenarios_is_byte_stable(scenario_dir, tmp_path):
    make_scenarios(tmp_path)
    for p in scenario_dir.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


def test_scenario_constants(scenario_dir):
    di = load_config(scenario_dir / "double_integrator.json")
    assert (di.horizon, di.alpha, di.system["T"]) == (5, 0.8, 0.25)
    assert np.allclose(di.build_disturbance().cov, 0.005 * np.eye(2))
    chain = load_config(scenario_dir / "chain.json").with_dim(5)
    assert np.allclose(chain.build_disturbance().cov, 1e-5 * np.eye(5))
    assert np.allclose(chain.build_system().input_space.to_v().vertices.ravel() ** 2, 0.01)
    cwh = load_config(scenario_dir / "cwh.json")
    assert np.allclose(cwh.build_disturbance().cov, 1e-4 * np.diag([1, 1, 5e-4, 5e-4]))
    lo, hi = cwh.build_system().input_space.bounding_box()
    assert np.allclose(lo, -0.1) and np.allclose(hi, 0.1)


def test_double_integrator_matrices_closed_form(scenario_dir):
    sys_ = load_config(scenario_dir / "double_integrator.json").build_system()
    T = 0.25
    for k in range(sys_.horizon):
        assert np.allclose(sys_.A_at(k), [[1, T], [0, 1]])
        assert np.allclose(sys_.B_at(k), [[T * T / 2], [T]])


@pytest.mark.parametrize("patch, path", [
    ({"alpha": 1.5}, "alpha"),
    ({"horizon": 0}, "horizon"),
    ({"checks": ["sandwich", "bogus"]}, "checks[1]"),
    ({"bounded_set": {"strategy": "cube"}}, "bounded_set.strategy"),
    ({"bounded_set": {"strategy": "multi"}}, "bounded_set.offsets"),
    ({"oracle": {"enabled": False}}, "oracle.enabled"),
    ({"tubes": ["minimal"]}, "tubes"),
    ({"colour": "red"}, "colour"),
])
def test_config_errors_name_the_field(patch, path):
    d = double_integrator_config().to_dict()
    d.update(patch)
    with pytest.raises(ConfigInvalid) as exc:
        ScenarioConfig.from_dict(d)
    assert exc.value.path == path


def test_with_dim_only_for_chains():
    assert chain_config().with_dim(3).build_system().dim == 3
    with pytest.raises(ConfigInvalid):
        double_integrator_config().with_dim(3)


# --- run ------------------------------------------------------------------

def test_run_double_integrator(di_run):
    code, out = di_run
    assert code == cli.EXIT_PASS
    for name in ("tube_minimal.json", "tube_maximal.json", "dp_mask_alpha0.8.csv", "timings.csv",
                 "verdict.json", "report.json"):
        assert (out / name).exists(), name
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["passed"] and verdict["checks"]["sandwich"]["status"] == "pass"
    header = (out / "timings.csv").read_text().splitlines()[0]
    assert header == "phase,k,milliseconds"
    assert json.loads((out / "timings.json").read_text())["speed_ratio"]["ratio"] > 0


def test_run_is_deterministic(di_run, scenario_dir, tmp_path):
    _, first = di_run
    assert cli.main(["run", "--scenario", str(scenario_dir / "double_integrator.json"),
                     "--out", str(tmp_path), "--quiet"]) == cli.EXIT_PASS
    for p in first.iterdir():
        if p.name.startswith("timings"):
            continue
        assert (tmp_path / p.name).read_bytes() == p.read_bytes(), p.name


def test_emitted_polytopes_reparse(di_run):
    from lagreach.reach import minimal_reach_tube
    from lagreach.runner import build_disturbance_sets

    _, out = di_run
    cfg = double_integrator_config()
    g = cfg.build_disturbance()
    W = build_disturbance_sets(cfg, g, cfg.seed).W[0]
    direct = minimal_reach_tube(cfg.build_system(), cfg.build_tube(), W)
    saved = load_tube(out / "tube_minimal.json")
    D = unit_directions(np.random.default_rng(0), 16, 2)
    for k in range(cfg.horizon + 1):
        a = support_many(saved.sets[k], D)
        b = support_many(direct.sets[k], D)
        assert np.allclose(a, b, atol=1e-9)
        again = from_dict(json.loads(json.dumps(to_dict(saved.sets[k]))))
        assert np.allclose(support_many(again, D), a, atol=1e-12)


def test_exit_code_check_failure(tmp_path):
    cfg = replace(chain_config(2), tube={"name": "viability_box", "lower": -0.002,
                                         "upper": 0.002})
    write_config(cfg, tmp_path / "tiny.json")
    code = cli.main(["run", "--scenario", str(tmp_path / "tiny.json"), "--out",
                     str(tmp_path / "o"), "--quiet"])
    assert code == cli.EXIT_FAIL
    verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert verdict["checks"]["nonempty"]["status"] == "fail"


def test_exit_code_config_errors(tmp_path, capsys):
    assert cli.main(["run", "--scenario", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG
    d = double_integrator_config().to_dict()
    d["alpha"] = 2.0
    (tmp_path / "bad.json").write_text(json.dumps(d))
    assert cli.main(["run", "--scenario", str(tmp_path / "bad.json")]) == cli.EXIT_CONFIG
    assert "alpha" in capsys.readouterr().err
    write_config(double_integrator_config(), tmp_path / "ok.json")
    assert cli.main(["run", "--scenario", str(tmp_path / "ok.json"),
                     "--check", "nope"]) == cli.EXIT_CONFIG


def test_exit_code_internal_error(monkeypatch, tmp_path):
    import lagreach.runner

    def boom(*a, **k):
        raise RuntimeError("simulated")

    monkeypatch.setattr(lagreach.runner, "run_scenario", boom)
    write_config(double_integrator_config(), tmp_path / "ok.json")
    assert cli.main(["run", "--scenario", str(tmp_path / "ok.json")]) == cli.EXIT_INTERNAL


# --- geom -----------------------------------------------------------------

def _write(tmp_path, name, S):
    p = tmp_path / name
    p.write_text(json.dumps(to_dict(S)))
    return str(p)


def test_geom_subcommand(tmp_path, capsys):
    a = _write(tmp_path, "a.json", HPolytope.box([-1, -1], [1, 1]))
    b = _write(tmp_path, "b.json", HPolytope.box([-0.25, -0.25], [0.25, 0.25]))

    def run(*argv):
        assert cli.main(["geom", *argv]) == 0
        return json.loads(capsys.readouterr().out)

    assert run("volume", a)["volume"] == pytest.approx(4.0)
    assert run("support", a, "--direction", "1,1")["support"] == pytest.approx(2.0)
    assert run("contains", b, "--point", "0.3,0")["contains"] is False
    assert run("subset", b, a)["subset"] is True
    bbox = run("bbox", from_file := _write(tmp_path, "s.json", from_dict(run("sum", a, b))))
    assert np.allclose(bbox["lower"], -1.25) and np.allclose(bbox["upper"], 1.25)
    diff = from_dict(run("diff", a, b))
    assert np.allclose(diff.bounding_box()[1], 0.75)
    assert run("volume", from_file)["volume"] == pytest.approx(6.25)
    out = tmp_path / "hull.json"
    assert cli.main(["geom", "hull", a, b, "--output", str(out)]) == 0
    assert from_dict(json.loads(out.read_text())).to_h().contains(np.array([0.9, -0.9]))
    assert cli.main(["geom", "sum", a]) == cli.EXIT_CONFIG
    assert cli.main(["geom", "support", a]) == cli.EXIT_CONFIG
