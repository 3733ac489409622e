import csv
import json

import pytest

from leasegame.cli import run_command
from leasegame.config import SCHEMA, build_scenario, load_config, parse_override, resolve, schema_table
from leasegame.errors import ConfigurationError
from leasegame.experiments import ScenarioConfig
from leasegame.game import GameParams, SecondaryParams
from leasegame.power_control import DEFAULT_MAX_ITER, DEFAULT_TOL
from leasegame.primary import PrimaryParams


def test_defaults_match_library_defaults():
    cfg = build_scenario(resolve())
    assert cfg.secondary == SecondaryParams()
    assert cfg.primary == PrimaryParams()
    assert cfg.game == GameParams()
    assert cfg.game.tol == DEFAULT_TOL and cfg.game.max_iter == DEFAULT_MAX_ITER
    ref = ScenarioConfig()
    assert (cfg.k, cfg.runs, cfg.seed, cfg.schemes) == (ref.k, ref.runs, ref.seed, ref.schemes)


def test_schema_table_lists_every_key():
    table = schema_table()
    for key in SCHEMA:
        assert f"`{key}`" in table


def test_nested_yaml_flattened(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("qos:\n  lambda: 4\nscenario.k: 6\n")
    assert load_config(path) == {"qos.lambda": 4, "scenario.k": 6}


def test_override_parsing():
    assert parse_override("qos.lambda=4") == ("qos.lambda", 4)
    assert parse_override("scenario.schemes=RR,CP") == ("scenario.schemes", "RR,CP")
    assert resolve({"scenario.schemes": "RR,CP"})["scenario.schemes"] == ("RR", "CP")
    with pytest.raises(ConfigurationError):
        parse_override("novalue")


@pytest.mark.parametrize("layer, key", [({"qos.lamda": 1}, "qos.lamda"),
                                        ({"scenario.k": "ten"}, "scenario.k"),
                                        ({"scenario.schemes": "RR,XX"}, "scenario.schemes"),
                                        ({"scenario.backward_induction": 1},
                                         "scenario.backward_induction")])
def test_resolve_names_bad_key(layer, key):
    with pytest.raises(ConfigurationError) as err:
        resolve(layer)
    assert err.value.key == key


def test_build_scenario_names_bad_key():
    with pytest.raises(ConfigurationError) as err:
        build_scenario(resolve({"game.lambda_bs": 1.5}))
    assert err.value.key == "game.lambda_bs"


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = run_command([*args, "--out", str(out)])
    return code, out


def test_power_control(tmp_path):
    code, out = _run(tmp_path, "power-control", "-s", "scenario.k=20")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] and summary["iterations"] <= 50
    rows = list(csv.reader((out / "trace.csv").open()))
    assert rows[0] == ["iter", "k", "p_k", "sinr_k", "I_k"]
    assert len(rows) - 1 == 20 * (summary["iterations"] + 1)


def test_sweep_alpha_rows(tmp_path):
    code, out = _run(tmp_path, "sweep-alpha", "-s", "scenario.schemes=RR")
    assert code == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert len(rows) == 11
    assert sorted(float(r["alpha"]) for r in rows)[0] == 0.01
    decisions = json.loads((out / "decisions.json").read_text())
    assert set(decisions) == {"RR"}


def test_monte_carlo_byte_identical(tmp_path):
    args = ["monte-carlo", "--runs", "3", "--seed", "9", "-s", "scenario.k=6"]
    assert run_command([*args, "--out", str(tmp_path / "a")]) == 0
    assert run_command([*args, "--out", str(tmp_path / "b")]) == 0
    for name in ("runs.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_backward_induction_and_replay(tmp_path):
    code, out = _run(tmp_path, "backward-induction", "-s", "scenario.k=4",
                     "-s", "game.alpha_step=0.1")
    assert code == 0
    sol = json.loads((out / "solution.json").read_text())
    assert sol["u_p"] >= sol["u_reservation"]
    scenario = out / "scenario.json"
    code = run_command(["replay", str(scenario), "--out", str(tmp_path / "r"),
                        "-s", "scenario.schemes=RS"])
    assert code == 0
    replay = json.loads((tmp_path / "r" / "replay.json").read_text())
    assert len(replay["RS"]["decision"]["ordered_crs"]) == 4


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario.k: 5\nmc.runs: 2\nscenario.schemes: [RS]\n")
    monkeypatch.setenv("LEASEGAME_OUT", str(tmp_path / "env"))
    assert run_command(["monte-carlo", "-c", str(cfg)]) == 0
    rows = list(csv.DictReader((tmp_path / "env" / "runs.csv").open()))
    assert len(rows) == 2 and {r["scheme"] for r in rows} == {"RS"}


@pytest.mark.parametrize("args", [["monte-carlo", "-s", "qos.lambda=-1"],
                                  ["monte-carlo", "-s", "bogus.key=1"],
                                  ["replay"],
                                  ["sweep-alpha", "-c", "missing.yaml"]])
def test_errors_leave_no_output(tmp_path, capsys, args):
    code, out = _run(tmp_path, *args)
    assert code == 2
    assert not out.exists()
    line = capsys.readouterr().err.strip().splitlines()[-1]
    err = json.loads(line)
    assert err["error"] == "ConfigurationError" and err["key"]


def test_malformed_yaml(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario.k: [1,\n")
    code, out = _run(tmp_path, "monte-carlo", "-c", str(cfg))
    assert code == 2 and not out.exists()
    assert json.loads(capsys.readouterr().err)["key"] == "config"
