import json
import math
import os

import pytest

from plasmageom.cli import (ANCHORS, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, EXIT_RUNTIME, main,
                            run_scenario)
from plasmageom.config import SCENARIOS, ConfigError, parse_config


def test_minimal_config_fills_defaults():
    cfg = parse_config('scenario = "landau"\n')
    assert cfg.grid["Nx"] == 64 and cfg.grid["Nv"] == 256
    assert cfg.grid["L"] == pytest.approx(4 * math.pi)
    assert cfg.params["amplitude"] == 1e-3 and cfg.seed == 0


def test_two_stream_box_is_longer():
    assert parse_config("", scenario="two_stream").grid["L"] == pytest.approx(10 * math.pi)


def test_negative_step_is_named():
    with pytest.raises(ConfigError) as err:
        parse_config('scenario = "landau"\n[params]\ndt = -0.1\n')
    assert any("dt" in p for p in err.value.problems)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as err:
        parse_config('scenario = "landau"\n[grid]\ndx = 0.1\n')
    assert err.value.problems == ["unknown key 'grid.dx'"]


def test_parse_error_has_position():
    with pytest.raises(ConfigError) as err:
        parse_config('scenario = "landau"\n[grid\nNx = 3\n')
    msg = err.value.problems[0]
    assert "line 2" in msg and "column" in msg


def test_every_problem_is_listed():
    text = 'scenario = "landau"\nbogus = 1\n[grid]\nNx = 2\nv_max = -1.0\n[params]\nsigma = 0.0\n'
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    joined = " | ".join(err.value.problems)
    for needle in ("bogus", "grid.Nx", "grid.v_max", "params.sigma"):
        assert needle in joined
    assert len(err.value.problems) == 4


def test_scenario_must_match_command():
    with pytest.raises(ConfigError, match="does not match"):
        parse_config('scenario = "landau"\n', scenario="two_stream")
    with pytest.raises(ConfigError, match="scenario must be one of"):
        parse_config("")


@pytest.mark.parametrize("res,shape", [("low", (32, 128)), ("ref", (64, 256)), ("high", (128, 512))])
def test_resolution_override(res, shape):
    cfg = parse_config('scenario = "landau"\n[grid]\nNx = 16\n', resolution=res)
    assert (cfg.grid["Nx"], cfg.grid["Nv"]) == shape


def test_command_line_values_win():
    cfg = parse_config('scenario = "landau"\nseed = 4\noutput = "a"\n', seed=9, output="b")
    assert cfg.seed == 9 and cfg.output == "b"


def test_list_parameters_checked():
    with pytest.raises(ConfigError, match="fit_window"):
        parse_config('scenario = "two_stream"\n[params]\nfit_window = [30.0, 10.0]\n')
    with pytest.raises(ConfigError, match="modes"):
        parse_config('scenario = "ec_stability"\n[params]\nmodes = [0, 1]\n')


def test_every_scenario_has_anchor():
    assert set(ANCHORS) == set(SCENARIOS)


def _read(d, name):
    with open(os.path.join(d, name), "rb") as fh:
        return fh.read()


def test_pass_exit_and_artifacts(tmp_path):
    out = tmp_path / "gnh"
    assert main(["gnh_demo", "--out", str(out), "--seed", "3"]) == EXIT_PASS
    for name in ("config.json", "diagnostics.csv", "report.json", "summary.json"):
        assert (out / name).exists()
    rep = json.loads(_read(out, "report.json"))
    assert rep["anchor"] == ANCHORS["gnh_demo"] and rep["status"] == "pass" and rep["seed"] == 3


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[params]\ndt = -1.0\n")
    assert main(["landau", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "params.dt" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()
    assert main(["landau", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG


def test_failed_check_exit(tmp_path):
    cfgf = tmp_path / "c.toml"
    cfgf.write_text("[params]\nmin_time_order = 10.0\n")
    out = tmp_path / "conv"
    assert main(["convergence", "--config", str(cfgf), "--out", str(out)]) == EXIT_FAIL
    assert json.loads(_read(out, "summary.json"))["status"] == "fail"


def test_runtime_error_keeps_partial_artifacts(tmp_path):
    cfgf = tmp_path / "c.toml"
    cfgf.write_text("[grid]\nNx = 8\nNv = 16\n[params]\nt_end = 1.0\n")
    out = tmp_path / "ts"
    assert main(["two_stream", "--config", str(cfgf), "--out", str(out)]) == EXIT_RUNTIME
    rep = json.loads(_read(out, "report.json"))
    assert rep["status"] == "error" and "window" in rep["error"]
    assert (out / "config.json").exists() and (out / "diagnostics.csv").exists()


@pytest.mark.parametrize("scenario", ["bracket_check", "gnh_demo"])
def test_reports_are_byte_identical(tmp_path, scenario):
    cfg = parse_config("", scenario=scenario, seed=42)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_scenario(cfg, str(a)) == run_scenario(cfg, str(b)) == EXIT_PASS
    for name in ("report.json", "diagnostics.csv", "summary.json", "config.json"):
        assert _read(a, name) == _read(b, name)


def test_seed_changes_report(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_scenario(parse_config("", scenario="bracket_check", seed=1), str(a))
    run_scenario(parse_config("", scenario="bracket_check", seed=2), str(b))
    assert _read(a, "report.json") != _read(b, "report.json")
