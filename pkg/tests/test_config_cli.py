import csv

import numpy as np
import pytest
import yaml

from cttmfg import runner
from cttmfg.cli import EXIT_INVALID, EXIT_OK, main
from cttmfg.config import (
    bundled_config_path, bundled_configs, config_from_dict, config_to_dict, dump_config, load_config, parse_config,
)
from cttmfg.errors import ConfigError


def _raw(name="s5_linear"):
    return yaml.safe_load(bundled_config_path(name).read_text())


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def _small(tmp_path, **sim):
    data = _raw()
    data["grid"] = {"dt": 0.01, "T_max": 6.0}
    data["sim"] = {"N": 30, "T": 1.0, "seed": 3, **sim}
    return _write(tmp_path, data)


def test_bundled_linear_config():
    cfg = load_config("s5_linear")
    assert cfg.target.y == 20.0 and cfg.z == 17.0 and cfg.mu_auto
    assert cfg.costs.delta == 0.001 and cfg.costs.q_x0 == 200.0 and cfg.costs.r == 10.0
    assert cfg.population.types[0].sigma == 0.15 and cfg.initial.mean == 21.0


@pytest.mark.parametrize("name", bundled_configs())
def test_bundled_configs_round_trip(name):
    cfg = load_config(name)
    assert parse_config(dump_config(cfg)) == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_comfort_violation_names_section():
    data = _raw()
    data["comfort"] = {"l": 25.0, "h": 17.0}
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert any(v.startswith("comfort") for v in info.value.violations)


def test_weights_must_sum_to_one():
    data = _raw()
    data["population"]["weights"] = [0.9]
    with pytest.raises(ConfigError, match="weights"):
        config_from_dict(data)


def test_violations_are_collected():
    data = _raw()
    data["comfort"] = {"l": 25.0, "h": 17.0}
    data["population"]["weights"] = [0.9]
    data["costs"]["r"] = -1.0
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert len(info.value.violations) >= 3


def test_parse_error_reports_position():
    with pytest.raises(ConfigError, match=r"bad\.yaml:3:\d+: parse error"):
        parse_config("sim:\n  N: 3\n  T: 1: 2\n", "bad.yaml")


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/cfg.yaml")


def test_cli_bad_config_exit_code(tmp_path, capsys):
    data = _raw()
    data["comfort"] = {"l": 25.0, "h": 17.0}
    rc = main(["simulate", "--config", str(_write(tmp_path, data)), "--out", str(tmp_path / "o"), "--quiet"])
    assert rc == EXIT_INVALID
    assert "comfort" in capsys.readouterr().err


def test_cli_seed_override_validated(tmp_path):
    rc = main(["simulate", "--config", str(_small(tmp_path)), "--seed", "-1", "--out", str(tmp_path / "o"),
               "--quiet"])
    assert rc == EXIT_INVALID


def test_cli_simulate_artifacts(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(_small(tmp_path)), "--out", str(out), "--quiet"]) == EXIT_OK
    rows = list(csv.reader((out / "eat.csv").open()))
    assert rows[0][:4] == ["time", "eat", "x_bar_theory", "q_y"]
    assert len(rows) - 1 == 101
    assert not (out / "paths.csv").exists()
    assert (out / "summary.csv").exists()


def test_cli_rerun_is_bitwise_identical(tmp_path):
    cfg = str(_small(tmp_path))
    for d in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / d), "--paths", "--quiet"]) == EXIT_OK
    for f in ("eat.csv", "paths.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_cli_near_fp_summary(tmp_path):
    out = tmp_path / "o"
    assert main(["near-fp", "s5_linear", "--out", str(out), "--quiet"]) == EXIT_OK
    summary = dict(csv.reader((out / "summary.csv").open()))
    assert float(summary["output_terminal_gap"]) < 0.05
    assert (out / "descent_log.csv").exists() and (out / "near_fp.csv").exists()


def test_cli_compare_table(tmp_path):
    out = tmp_path / "o"
    assert main(["compare", "s5_linear", "--out", str(out), "--quiet"]) == EXIT_OK
    table = {r[0]: r[1:] for r in csv.reader((out / "compare.csv").open())}
    mf, lq = map(float, table["mean_excursion"])
    assert mf < lq


def test_cli_verify(tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--out", str(out), "--quiet"]) == EXIT_OK
    rows = list(csv.reader((out / "verify.csv").open()))[1:]
    assert rows and all(r[1] == "True" for r in rows)


def test_segments_are_continuous():
    cfg = load_config("s5_segments")
    run = runner.run_segments(cfg)
    assert len(run.boundaries) == len(cfg.segments) + 1
    assert np.all(np.diff(run.t) > 0)
    jumps = np.abs(np.diff(run.eat))
    first = run.t[1:] <= run.boundaries[1]
    for b in run.boundaries[1:-1]:
        k = int(np.argmin(np.abs(run.t - b)))
        # the law changes at a boundary, the temperature does not
        assert jumps[k] <= jumps[first].max()
    assert abs(run.eat[-1] - cfg.segments[-1].y) < 0.1
