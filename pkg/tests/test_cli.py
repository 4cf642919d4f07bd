import json

import pytest

from t2tnet.cli import EXIT_CONFIG, EXIT_OK, main
from t2tnet.efficiency import EfficiencyParams, table_csv
from t2tnet.rf import Position, RfEnvironment
from t2tnet.scenarios import ConfigError, ScenarioConfig, bridge_deployment, relay_point, run_scenario
from t2tnet.topology import build_graph, shortest_path


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def test_efficiency_passthrough(tmp_path):
    code, out = run(tmp_path, "efficiency", "--set", "params.H=4")
    assert code == EXIT_OK
    assert (out / "efficiency.csv").read_text() == table_csv(EfficiencyParams(H=4, M=2, p_c=0.3))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["params"]["H"] == 4
    assert set(manifest["outputs"]) == {"efficiency.csv"}
    assert "time" not in json.dumps(manifest).lower()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "range", "env": {"k0": 0.5}, "params": {"d1": 2.0}}))
    code, out = run(tmp_path, "--config", str(cfg), "--set", "params.max_tags=5", "--seed", "3")
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["config"]["env"]["k0"] == 0.5
    assert len((out / "range.csv").read_text().splitlines()) <= 6


@pytest.mark.parametrize("args", [
    ["nope"],
    ["range", "--set", "bogus=1"],
    ["range", "--set", "env.k9=1"],
    ["range", "--set", "params.zzz=1"],
    ["range", "--set", "noequals"],
    ["--set", "runs=2"],
    ["range", "--set", "env.k0=2.0"],
    ["range", "--config", "/does/not/exist.json"],
])
def test_config_errors_exit_two(tmp_path, args, capsys):
    code, _ = run(tmp_path, *args)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_keys_rejected_in_config_object():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"scenario": "range", "extra": 1})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"scenario": "range", "seed": -1})


@pytest.mark.parametrize("scenario,overrides", [
    ("coverage", ["runs=30", "params.tag_counts=[2,3]", "params.area_side=3"]),
    ("range", []),
    ("line-range", ["params.max_hops=2", "params.frames=2"]),
    ("grid-coverage", ["runs=1", "params.frames=2", "params.side=1.0", "params.backward_side=1.0"]),
    ("mac-sim", ["params.messages=3", "params.duration_ms=2000"]),
    ("efficiency", ["params.sim_runs=5"]),
    ("bridge", ["params.frames=2"]),
])
def test_every_scenario_is_repeatable(tmp_path, scenario, overrides):
    sets = [a for o in overrides for a in ("--set", o)]
    a = main([scenario, *sets, "--seed", "17", "--out", str(tmp_path / "a")])
    b = main([scenario, *sets, "--seed", "17", "--out", str(tmp_path / "b")])
    assert a == b == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "manifest.json" in names and len(names) >= 2
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_relay_point_tie_break():
    grid = [(x * 0.5, y * 0.5) for x in range(5) for y in range(5)]
    # midpoint (1.0, 1.0) is itself a free grid point
    assert relay_point((0.5, 0.5), (1.5, 1.5), grid, {(0.5, 0.5), (1.5, 1.5)}) == (1.0, 1.0)
    # midpoint (0.75, 0.5) is equidistant from (0.5, 0.5) and (1.0, 0.5); the source is taken
    assert relay_point((0.5, 0.5), (1.0, 0.5), grid, {(0.5, 0.5), (1.0, 0.5)}) == (0.5, 0.0)


def test_bridge_needs_its_middle_tag():
    env = RfEnvironment()
    dep = bridge_deployment()
    path = shortest_path(build_graph(env, dep), 1, 2)
    assert path is not None and 5 in path and len(path) >= 3
    without = type(dep)(dep.exciters, [t for t in dep.tags if t[0] != 5], dep.area_side)
    assert shortest_path(build_graph(env, without), 1, 2) is None
    assert dep.position(1).distance_to(Position(0, 0)) < dep.position(1).distance_to(dep.exciters[1])
    assert dep.position(2).distance_to(dep.exciters[1]) < dep.position(2).distance_to(Position(0, 0))


def test_scenario_outputs_do_not_touch_disk():
    out = run_scenario(ScenarioConfig("efficiency"))
    assert list(out) == ["efficiency.csv"]
