import numpy as np
import pytest

from admr_sim import __version__, noise, spectrum as sp
from admr_sim.cli import main
from admr_sim.config import SCHEMA, RunConfig, parse_axis, read_config_text, shipped_configs
from admr_sim.csvio import parse_trace, render_trace
from admr_sim.errors import ConfigError

SMALL = {
    "spectrum": ["--config", "fig3a", "--set", "spectrum.delta=lin:-4:4:81"],
    "slope-map": ["--set", "slope_map.p_in=0.2,0.4", "--set", "slope_map.omega=0.1,0.3"],
    "sense-map": ["--set", "sweep.nv_ppb=10,100", "--set", "sweep.omega=0.1,0.4"],
    "optimize": ["--set", "sweep.nv_ppb=log:3:300:4", "--set", "sweep.omega=lin:0.1:0.7:4",
                 "--set", "optimize.rounds=1"],
    "synth": ["--set", "synth.length=4000", "--set", "synth.kind=white+drift",
              "--set", "synth.rate=1e-6", "--seed", "9"],
}


def run(tmp_path, name, args, out="out.csv"):
    path = tmp_path / out
    code = main([name, *args, "--out", str(path)])
    return code, path


def read_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])


@pytest.fixture
def trace_file(tmp_path):
    code, path = run(tmp_path, "synth", SMALL["synth"], "trace.csv")
    assert code == 0
    return path


def test_header_echoes_version_and_config(tmp_path):
    code, path = run(tmp_path, "spectrum", SMALL["spectrum"])
    assert code == 0
    comments = [ln for ln in path.read_text().splitlines() if ln.startswith("#")]
    assert comments[0] == f"# admr_sim {__version__} spectrum"
    echoed = {ln[2:].split(" = ")[0] for ln in comments if " = " in ln}
    assert set(SCHEMA) - {"run.threads"} <= echoed
    assert "# spectrum.delta = lin:-4:4:81" in comments


def test_spectrum_output_matches_library(tmp_path):
    _, path = run(tmp_path, "spectrum", SMALL["spectrum"])
    header, rows = read_rows(path)
    assert header == ["delta_mhz", "signal_v"]
    cfg = RunConfig.load("fig3a", ["spectrum.delta=lin:-4:4:81"])
    res = sp.lockin_spectrum(cfg["spectrum.delta"], cfg.cavity(), cfg.rates(),
                             cfg["drive.omega"], cfg["drive.p_in"], cfg.lockin())
    np.testing.assert_array_equal(rows[:, 1], res.signal)
    np.testing.assert_array_equal(rows[::-1, 1], -rows[:, 1])


def test_zero_modulation_depth(tmp_path):
    _, path = run(tmp_path, "spectrum", SMALL["spectrum"] + ["--set", "lockin.delta_mod=0"])
    _, rows = read_rows(path)
    assert np.all(rows[:, 1] == 0.0)


def test_single_cell_slope_map(tmp_path):
    _, path = run(tmp_path, "slope-map", ["--set", "slope_map.p_in=0.4",
                                          "--set", "slope_map.omega=0.3"])
    header, rows = read_rows(path)
    assert header == ["p_in_w", "omega_mhz", "slope_v_per_hz"]
    cfg = RunConfig()
    assert rows.shape == (1, 3)
    assert rows[0, 2] == sp.slope_at_resonance(cfg.cavity(), cfg.rates(), 0.3, 0.4, cfg.lockin())


def test_slope_map_is_row_major(tmp_path):
    _, path = run(tmp_path, "slope-map", SMALL["slope-map"])
    _, rows = read_rows(path)
    np.testing.assert_array_equal(rows[:, :2], [[0.2, 0.1], [0.2, 0.3], [0.4, 0.1], [0.4, 0.3]])


def test_sense_map_columns_and_single_point(tmp_path):
    _, path = run(tmp_path, "sense-map", ["--set", "sweep.nv_ppb=30", "--set", "sweep.omega=0.3"])
    header, rows = read_rows(path)
    assert header == ["nv_ppb", "p_in_w", "omega_mhz", "eta_t_per_rthz", "finesse", "p_cav_w",
                      "p_detected_w", "r1"]
    assert rows.shape == (1, 8)


def test_sense_map_zero_drive_rows_are_reported(tmp_path):
    code, path = run(tmp_path, "sense-map", ["--set", "sweep.nv_ppb=30",
                                             "--set", "sweep.omega=0,0.3"])
    assert code == 0
    assert "# error row 0: ZeroSlope" in path.read_text()
    _, rows = read_rows(path)
    assert np.isnan(rows[0, 3]) and np.isfinite(rows[1, 3])


def test_optimize_summary(tmp_path, capsys):
    code, path = run(tmp_path, "optimize", SMALL["optimize"])
    assert code == 0
    header, rows = read_rows(path)
    assert rows.shape == (1, 9) and header[-1] == "p_r_on_w"
    err = capsys.readouterr().err
    assert "optimum (reflect)" in err and "finesse" in err


def test_optimize_without_drive_is_usage_error(tmp_path, capsys):
    code, path = run(tmp_path, "optimize", ["--set", "sweep.omega=0"])
    assert code == 2
    assert not path.exists()


def test_missing_config(tmp_path, capsys):
    code, path = run(tmp_path, "spectrum", ["--config", str(tmp_path / "nope.cfg")])
    assert code == 2
    assert not path.exists()
    assert "not found" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    code, path = run(tmp_path, "spectrum", ["--set", "cavity.r3=0.5"])
    assert code == 2 and not path.exists()


def test_model_error_exit_code(tmp_path, capsys):
    code, path = run(tmp_path, "spectrum", ["--set", "drive.p_in=0"])
    assert code == 3 and not path.exists()
    assert "lockin_spectrum" in capsys.readouterr().err


def test_psd_and_allan_of_synthetic_white(tmp_path):
    _, trace = run(tmp_path, "synth", ["--set", "synth.length=100000", "--set", "synth.asd=1e-6",
                                       "--seed", "3"], "white.csv")
    _, psd = run(tmp_path, "psd", [str(trace), "--set", "noise.resolution=1"], "psd.csv")
    header, rows = read_rows(psd)
    assert header == ["frequency_hz", "asd", "count"]
    assert np.mean(rows[1:, 1]) == pytest.approx(1e-6, rel=0.05)
    _, allan = run(tmp_path, "allan", [str(trace)], "allan.csv")
    header, rows = read_rows(allan)
    assert header == ["tau_s", "adev", "count"]
    assert noise.loglog_slope(rows[2:-3, 0], rows[2:-3, 1]) == pytest.approx(-0.5, abs=0.05)


def test_constant_trace_gives_zero(tmp_path):
    path = tmp_path / "const.csv"
    path.write_text(render_trace(noise.TimeTrace(100.0, np.full(1000, 0.7))))
    _, psd = run(tmp_path, "psd", [str(path), "--set", "noise.resolution=1"], "psd.csv")
    assert np.all(read_rows(psd)[1][1:, 1] == 0.0)
    _, allan = run(tmp_path, "allan", [str(path)], "allan.csv")
    assert np.all(read_rows(allan)[1][:, 1] == 0.0)


def test_calibrated_psd_reports_tesla(tmp_path, trace_file):
    _, psd = run(tmp_path, "psd", [str(trace_file), "--set", "noise.resolution=1",
                                   "--set", "noise.slope=2e-6"], "psd.csv")
    assert "# unit = tesla" in psd.read_text()


def test_malformed_trace_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# trace: unit=volts sample_rate=10\ntime_s,value\n0,1\n0.1,abc\n")
    code, path = run(tmp_path, "psd", [str(bad)], "psd.csv")
    assert code == 2 and not path.exists()
    assert "bad.csv:4" in capsys.readouterr().err


def test_irregular_trace_rejected():
    with pytest.raises(ConfigError):
        parse_trace("time_s,value\n0,1\n0.1,2\n0.25,3\n")


def test_trace_round_trip():
    t = noise.synth_trace("white", {"asd": 1.0}, 1, 250.0, 500)
    back = parse_trace(render_trace(t, ["comment"]))
    np.testing.assert_array_equal(back.values, t.values)
    assert back.sample_rate == 250.0 and back.unit == "volts"


@pytest.mark.parametrize("name", sorted(SMALL) + ["psd", "allan"])
def test_rerun_is_bit_identical(tmp_path, trace_file, name):
    analyses = {"psd": [str(trace_file), "--set", "noise.resolution=2"], "allan": [str(trace_file)]}
    args = analyses.get(name) or SMALL[name]
    _, a = run(tmp_path, name, args, "a.csv")
    _, b = run(tmp_path, name, args, "b.csv")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("name", ["slope-map", "sense-map"])
def test_thread_count_does_not_change_output(tmp_path, name):
    _, a = run(tmp_path, name, SMALL[name] + ["--threads", "1"], "a.csv")
    _, b = run(tmp_path, name, SMALL[name] + ["--threads", "3"], "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\ncavity.r2 = 0.995\ndrive.omega = 0.5  # trailing\n")
    cfg = RunConfig.load(str(cfg_file), ["drive.omega=0.7"], env={})
    assert cfg["cavity.r2"] == 0.995
    assert cfg["drive.omega"] == 0.7
    assert cfg["cavity.r1"] == 0.948
    via_env = RunConfig.load(None, [], env={"ADMR_SIM_CONFIG": str(cfg_file)})
    assert via_env["drive.omega"] == 0.5


def test_config_errors_name_line():
    with pytest.raises(ConfigError, match="x.cfg:2"):
        read_config_text("cavity.r1 = 0.9\nbogus.key = 1\n", "x.cfg")
    with pytest.raises(ConfigError, match="x.cfg:1"):
        read_config_text("cavity.r1 0.9\n", "x.cfg")
    with pytest.raises(ConfigError):
        RunConfig.load(None, ["cavity.r1=abc"], env={})
    with pytest.raises(ConfigError):
        RunConfig.load(None, ["cavity.r1=1.5"], env={}).cavity()


def test_axis_syntax():
    np.testing.assert_array_equal(parse_axis("lin:0:1:3"), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(parse_axis("log:1:100:3"), [1.0, 10.0, 100.0])
    np.testing.assert_array_equal(parse_axis("0.1, 0.2"), [0.1, 0.2])
    np.testing.assert_array_equal(parse_axis("0.4"), [0.4])
    with pytest.raises(ConfigError):
        parse_axis("log:0:1:3")


def test_shipped_configs_load():
    assert shipped_configs() == ["fig3a", "fig3c", "fig5a", "fig5b", "fig5c", "fig5d"]
    for name in shipped_configs():
        cfg = RunConfig.load(name, env={})
        cfg.cavity(), cfg.design(), cfg.sweep_grid(), cfg.lockin()
    assert RunConfig.load("fig5b", env={})["sweep.channel"] == "transmit"
    assert RunConfig.load("fig5d", env={})["sweep.channel"] == "reflect"
