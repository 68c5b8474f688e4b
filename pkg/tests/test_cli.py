import math

import numpy as np
import pytest

from kzstring import cli
from kzstring.config import dump_summary, load_config, parse_number, parse_text
from kzstring.errors import ConfigError

SCENARIOS = ["circle", "ellipse", "drift", "line"]


def _summary(path):
    return parse_text(path.read_text())


@pytest.mark.parametrize("text, value", [("pi/2", math.pi / 2), ("2*pi", 2 * math.pi), ("-1e-3", -1e-3),
                                         ("tau - 1", 2 * math.pi - 1), ("3", 3.0)])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["__import__('os')", "pi(", "1/0", "e"])
def test_parse_number_rejects(text):
    with pytest.raises(ConfigError):
        parse_number(text, "x")


@pytest.mark.parametrize("given, key", [
    ({"curve.preset": "circle", "period": "-1"}, "period"),
    ({"curve.preset": "circle", "grid.theta_nodes": "8"}, "grid.theta_nodes"),
    ({"curve.preset": "circle", "tol.gauge": "0"}, "tol.gauge"),
    ({"curve.preset": "circle", "time.list": "0, 1, 0.5"}, "time.list"),
    ({"curve.preset": "circle", "curve.colour": "red"}, "curve.colour"),
    ({"curve.preset": "fourier", "curve.cos.1": "0, 1"}, "curve.cos"),
    ({}, "curve.preset"),
])
def test_config_errors_name_the_key(given, key):
    with pytest.raises(ConfigError) as exc:
        load_config(given)
    assert exc.value.key == key
    assert key in str(exc.value)


def test_duplicate_keys_rejected():
    with pytest.raises(ConfigError):
        parse_text("a = 1\na = 2\n")


def test_fourier_config():
    cfg = load_config({"curve.preset": "fourier", "curve.cos.1": "0, 1", "curve.cos.2": "0, 0",
                       "curve.sin.1": "0, 0", "curve.sin.2": "0, 1", "velocity.cos.1": "0.1, 0",
                       "velocity.cos.2": "0, 0", "velocity.sin.1": "0, 0", "velocity.sin.2": "0, 0.1",
                       "time.t_end": "1", "time.stride": "0.25"})
    assert cfg.times == [0.0, 0.25, 0.5, 0.75, 1.0]
    curve, kzmap = cli.build_from_config(cfg)
    assert kzmap.Sigma > 0


def test_summary_round_trips_through_parser():
    entries = {"a.b": 0.1, "flag": True, "v": [1.0, 2.5], "name": "x"}
    parsed = parse_text(dump_summary(entries))
    assert float(parsed["a.b"]) == 0.1 and parsed["flag"] == "true" and parsed["v"] == "1, 2.5"


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_simulate_scenarios(scenario, tmp_path):
    code = cli.main(["simulate", "--config", f"scenarios/{scenario}.cfg", "--out", str(tmp_path), "--quiet"])
    assert code == cli.EXIT_PASS
    summary = _summary(tmp_path / "summary.txt")
    manifest = _summary(tmp_path / "manifest.txt")
    assert summary["status"] == "pass"
    first = (tmp_path / manifest["state.000.file"]).read_text().splitlines()
    assert first[0] == "t,sigma,theta,x1,x2"
    assert len(first) - 1 == load_config(f"scenarios/{scenario}.cfg").sigma_nodes


def test_circle_csv_values(tmp_path):
    cli.main(["simulate", "--config", "scenarios/circle.cfg", "--out", str(tmp_path), "--quiet", "--nodes", "64"])
    data = np.loadtxt(tmp_path / "state_001.csv", delimiter=",", skiprows=1)
    t, s = data[:, 0], data[:, 1]
    assert np.allclose(data[:, 3:], np.c_[np.cos(s), np.sin(s)] * np.cos(t)[:, None], atol=1e-13)


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_verify_scenarios(scenario, tmp_path):
    code = cli.main(["verify", "--config", f"scenarios/{scenario}.cfg", "--out", str(tmp_path), "--quiet"])
    summary = _summary(tmp_path / "summary.txt")
    assert code == cli.EXIT_PASS, summary.get("failures")
    for key in ("residual.gauge.orthogonality.max", "residual.roundtrip.phi.max", "residual.theta_wave.max",
                "residual.harmonic.max"):
        assert key in summary


def test_verify_skips_collapse_time(tmp_path):
    cli.main(["verify", "--config", "scenarios/circle.cfg", "--out", str(tmp_path), "--quiet"])
    assert float(_summary(tmp_path / "summary.txt")["verify.skipped_times"]) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("scenario", ["ellipse", "line"])
def test_compare_scenarios(scenario, tmp_path):
    code = cli.main(["compare", "--config", f"scenarios/{scenario}.cfg", "--out", str(tmp_path), "--quiet"])
    assert code == cli.EXIT_PASS
    summary = _summary(tmp_path / "summary.txt")
    assert float(summary["compare.nodes.512.sup_error"]) <= 5e-4


def test_compare_single_resolution_has_no_order(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("curve.preset = circle\ncompare.nodes = 64\ncompare.t_end = 0.3\n")
    assert cli.main(["compare", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == cli.EXIT_PASS
    assert _summary(tmp_path / "summary.txt")["compare.order"] == "unavailable"


def test_kzmap_tables(tmp_path):
    assert cli.main(["kzmap", "--config", "scenarios/ellipse.cfg", "--out", str(tmp_path), "--quiet"]) == 0
    rho = np.loadtxt(tmp_path / "rho.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(rho[:, 1]) > 0)
    assert rho[-1, 1] == pytest.approx(9.688448220547675, abs=1e-12)
    assert (tmp_path / "theta_002.csv").exists()


def test_corruption_hook_fails_gauge(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("curve.preset = ellipse\ndebug.corrupt_lambda_minus = true\ntime.list = 0, 0.5\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == cli.EXIT_TOLERANCE
    summary = _summary(tmp_path / "summary.txt")
    assert summary["status"] == "fail" and "gauge" in summary["failures"]


def test_config_error_exit_code(tmp_path, caplog):
    cfg = tmp_path / "neg.cfg"
    cfg.write_text("curve.preset = circle\nperiod = -1\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "period" in caplog.text


def test_numeric_failure_exit_code(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text("curve.preset = circle\ncurve.velocity = 1.0, 0\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == cli.EXIT_NUMERIC
