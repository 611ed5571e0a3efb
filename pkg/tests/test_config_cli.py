"""Config parsing/echo round trips and end-to-end CLI runs with exit codes."""

import json
import math

import pytest

from latentstop.cli import main
from latentstop.config import (
    ConfigError,
    ExperimentConfig,
    config_lines,
    copy_config,
    parse_config_text,
    validate_config,
)


def _echo_lines(path):
    out = []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            out.append(line[2:])
        else:
            break
    return out


def _data_lines(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("# ")]
    return lines[0], lines[1:]  # header, rows


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_basics_comments_and_overrides():
    cfg = parse_config_text(
        "# full-line comment\n"
        "\n"
        "seed = 42   # trailing comment\n"
        "schedule.T = 1.5\n"
        "spectrum.true = 1.0, 0.5,0.25\n"
        "simulate.mc = yes\n"
        "grid.parameterization = time\n"
    )
    assert cfg.seed == 42
    assert cfg.schedule_T == 1.5
    assert cfg.spectrum_true == (1.0, 0.5, 0.25)
    assert cfg.sim_mc is True
    assert cfg.grid_parameterization == "time"
    # untouched fields keep their defaults
    assert cfg.mode == "curve" and cfg.grid_t_points == 1000


def test_parse_trailing_comma_and_inf():
    cfg = parse_config_text("spectrum.true = 1.0, 0.5,\nsimulate.cap = inf\n")
    assert cfg.spectrum_true == (1.0, 0.5)
    assert math.isinf(cfg.sim_cap)


def test_parse_errors_name_the_key():
    with pytest.raises(ConfigError, match="unknown config key 'no.such'"):
        parse_config_text("no.such = 1\n")
    with pytest.raises(ConfigError, match="bad value for 'seed'"):
        parse_config_text("seed = banana\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("just some words\n")
    with pytest.raises(ConfigError, match="simulate.mc"):
        parse_config_text("simulate.mc = maybe\n")


def test_config_lines_round_trip():
    cfg = ExperimentConfig(
        mode="partition",
        seed=9,
        spectrum_true=(1.0, 0.25, 0.0),
        spectrum_n=500,
        robust_u=2.0,
        robust_n=100000,
        sim_snapshots=(0.5, 1.0),
        sim_mc=True,
    )
    lines = config_lines(cfg)
    # None-valued fields are omitted entirely
    assert not any(l.startswith("spectrum.estimated") for l in lines)
    reparsed = parse_config_text("\n".join(lines))
    assert reparsed == cfg
    assert config_lines(reparsed) == lines


def test_validate_config_rejections():
    bad = [
        {"mode": "dance"},
        {"schedule_kind": "cosine"},
        {"schedule_T": 0.0},
        {"schedule_T": math.inf},
        {"grid_t_points": 1},
        {"grid_parameterization": "sqrt"},
        {"spectrum_true": (1.0, -0.1)},
        {"spectrum_n": 0},
        {"sim_steps": 0},
        {"sim_trajectories": 0},
        {"sim_score": "magic"},
        {"sim_score": "capped", "sim_cap": 1.0},
        {"sim_score": "capped", "sim_cap": math.inf},
        {"sim_stop_time": 3.0},
        {"stopping_d0": 0},
        {"erm_c_sweep": (2.0, 1.0)},
        {"robust_u": -1.0},
        {"robust_n": 0},
        {"robust_cuniv": 0.0},
    ]
    for overrides in bad:
        cfg = ExperimentConfig(**overrides)
        with pytest.raises(ConfigError):
            validate_config(cfg)
    validate_config(ExperimentConfig())  # defaults are valid


def test_copy_config_is_independent():
    cfg = ExperimentConfig(spectrum_true=(1.0, 0.5))
    dup = copy_config(cfg)
    dup.seed = 99
    dup.spectrum_true = (2.0,)
    assert cfg.seed == 1 and cfg.spectrum_true == (1.0, 0.5)


def test_cli_curve_outputs_and_echo(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25\ngrid.t_points = 50\n")
    out = tmp_path / "out"
    assert main(["curve", "--config", cfgfile, "--out", str(out)]) == 0
    csv_path = out / "curve.csv"
    assert csv_path.exists() and (out / "curve.png").exists()
    header, rows = _data_lines(csv_path)
    assert header == "t,logsnr,frechet_sq_d1,frechet_sq_d2,argmin_d"
    assert len(rows) == 50
    # echoed config parses back to an identical canonical form
    lines = _echo_lines(csv_path)
    reparsed = parse_config_text("\n".join(lines))
    assert config_lines(reparsed) == lines
    assert reparsed.mode == "curve"
    assert reparsed.grid_t_points == 50
    # the log-SNR grid runs from the data end up to just short of T
    first = rows[0].split(",")
    last = rows[-1].split(",")
    # the first backward time comes out of a numeric inversion of log-SNR
    assert abs(float(first[0])) < 1e-12
    assert float(last[0]) == pytest.approx(2.0 * (1.0 - 1e-4), rel=0, abs=1e-12)
    # argmin column matches the per-row minimum
    for row in rows[::10]:
        cells = row.split(",")
        values = [float(c) for c in cells[2:4]]
        assert int(cells[4]) == 1 + values.index(min(values))


def test_cli_curve_two_point_grid(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 0.5\ngrid.t_points = 2\n")
    out = tmp_path / "out"
    assert main(["curve", "--config", cfgfile, "--out", str(out)]) == 0
    _, rows = _data_lines(out / "curve.csv")
    assert len(rows) == 2


def test_cli_time_parameterization_endpoints(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 0.5\ngrid.t_points = 5\n"
                     "grid.parameterization = time\n")
    out = tmp_path / "out"
    assert main(["curve", "--config", cfgfile, "--out", str(out)]) == 0
    _, rows = _data_lines(out / "curve.csv")
    ts = [float(r.split(",")[0]) for r in rows]
    assert ts[0] == 0.0 and ts[-1] == 2.0
    # at the data end the signal-to-noise ratio diverges
    assert float(rows[-1].split(",")[1]) == math.inf


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path / "out")
    # missing required spectrum
    assert main(["curve", "--out", out]) == 2
    # unreadable config file
    assert main(["curve", "--config", str(tmp_path / "absent.cfg"), "--out", out]) == 2
    # unknown key in the config file
    bad = _write(tmp_path / "bad.cfg", "nope = 1\n")
    assert main(["curve", "--config", bad, "--out", out]) == 2
    # robust settings must come as a pair
    half = _write(tmp_path / "half.cfg",
                  "spectrum.true = 1.0, 0.25\nrobust.n = 1000\n")
    assert main(["partition", "--config", half, "--out", out]) == 2
    # numeric failure: a tiny sample makes the deviation radius infeasible
    wide = _write(tmp_path / "wide.cfg",
                  "spectrum.true = 1.0, 0.5, 0.2\nrobust.n = 10\nrobust.u = 1.0\n")
    assert main(["partition", "--config", wide, "--out", out]) == 3


def test_cli_partition_with_robust_brackets(tmp_path):
    # both interior boundaries (v < ~0.2465 keeps 3v/(1-v) below a2(T))
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.2, 0.04\n"
                     "robust.n = 10000000\nrobust.u = 1.0\n")
    out = tmp_path / "out"
    assert main(["partition", "--config", cfgfile, "--out", str(out)]) == 0
    body = (out / "partition.csv").read_text()
    assert "exact" in body and "plug-in" in body
    assert "robust-lower" in body and "robust-upper" in body
    summary = json.loads((out / "partition_summary.json").read_text())
    assert set(summary) == {"eps_u", "s_sigma", "interleaved"}
    assert summary["interleaved"] is True
    assert (out / "partition.png").exists()


def test_cli_partition_without_robust_has_no_summary(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg", "spectrum.true = 1.0, 0.25\n")
    out = tmp_path / "out"
    assert main(["partition", "--config", cfgfile, "--out", str(out)]) == 0
    assert not (out / "partition_summary.json").exists()


def test_cli_stopping_monotone_default_d0(tmp_path):
    # oracle estimate: the stopping condition holds with equality, delta = 0
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25, 0.0\ngrid.t_points = 40\n")
    out = tmp_path / "out"
    assert main(["stopping", "--config", cfgfile, "--out", str(out)]) == 0
    summary = json.loads((out / "stopping.json").read_text())
    assert summary["d0"] == 2  # the zero component is excluded by default
    assert summary["monotone"] is True
    assert summary["delta"] == 0.0
    assert summary["stop_time"] == 2.0
    assert summary["root_a2"] is None
    assert (out / "stopping_curve.csv").exists()
    assert (out / "stopping.png").exists()


def test_cli_stopping_interior_reference(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 0.25\nspectrum.estimated = 0.2\n"
                     "stopping.d0 = 1\ngrid.t_points = 40\n")
    out = tmp_path / "out"
    assert main(["stopping", "--config", cfgfile, "--out", str(out)]) == 0
    summary = json.loads((out / "stopping.json").read_text())
    assert summary["monotone"] is False and summary["clamped"] is False
    assert summary["delta"] == pytest.approx(0.032269260568798176, rel=0, abs=1e-15)
    assert summary["root_a2"] == pytest.approx(0.0625, rel=0, abs=1e-12)
    # requesting a dimension beyond the spectrum is a config error
    beyond = _write(tmp_path / "big.cfg",
                    "spectrum.true = 0.25\nstopping.d0 = 5\n")
    assert main(["stopping", "--config", beyond, "--out", str(out)]) == 2


def test_cli_erm_tables_per_cap(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25, 0.04\nerm.c_sweep = 2.0, 3.5\n")
    out = tmp_path / "out"
    assert main(["erm", "--config", cfgfile, "--out", str(out)]) == 0
    header, rows = _data_lines(out / "erm_summary.csv")
    assert header == "C,d1,d2,d_min"
    assert len(rows) == 2
    assert (out / "erm_table_C2.csv").exists()
    assert (out / "erm_table_C3.5.csv").exists()
    assert (out / "erm.png").exists()
    for row in rows:
        c, d1, d2, d_min = row.split(",")
        assert int(d1) <= int(d_min) <= int(d2)


def test_cli_simulate_snapshots_and_summary(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25\n"
                     "simulate.steps = 50\nsimulate.trajectories = 500\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfgfile, "--out", str(out)]) == 0
    header, rows = _data_lines(out / "snapshots.csv")
    assert header == "t,component,empirical_variance,analytic_variance,stderr"
    assert len(rows) == 5 * 2  # five default snapshot times, two components
    # the filled-in defaults appear in the echo and parse back cleanly
    lines = _echo_lines(out / "snapshots.csv")
    reparsed = parse_config_text("\n".join(lines))
    assert reparsed.sim_snapshots is not None and len(reparsed.sim_snapshots) == 5
    assert config_lines(reparsed) == lines
    header, rows = _data_lines(out / "simulate_summary.csv")
    assert header == "t,frechet_sq_empirical,frechet_sq_closed"
    assert len(rows) == 1
    assert (out / "simulate.png").exists()


def test_cli_fig3_left_files(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg", "grid.t_points = 60\n")
    out = tmp_path / "out"
    assert main(["fig3", "--side", "left", "--config", cfgfile, "--out", str(out)]) == 0
    assert (out / "fig3_left_curves.csv").exists()
    assert (out / "fig3_left_partition.csv").exists()
    assert (out / "fig3_left.png").exists()
    summary = json.loads((out / "fig3_left_summary.json").read_text())
    assert summary["side"] == "left"
    assert 1 <= summary["d_star"] <= 9
    assert "delta" not in summary
    header, _ = _data_lines(out / "fig3_left_curves.csv")
    assert header.startswith("t,logsnr,frechet_sq_d1") and header.endswith("argmin_d")


def test_cli_fig3_right_stopping_summary(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg", "grid.t_points = 60\n")
    out = tmp_path / "out"
    assert main(["fig3", "--side", "right", "--config", cfgfile, "--out", str(out)]) == 0
    summary = json.loads((out / "fig3_right_summary.json").read_text())
    assert summary["side"] == "right"
    assert summary["d0"] == 4  # the built-in spectrum has four positive variances
    assert "delta" in summary and "stop_time" in summary
    # the estimate comes from a seeded draw of 1000 rows by default
    assert any(l == "spectrum.n = 1000" for l in summary["config"])


def test_cli_fig3_mc_columns(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "grid.t_points = 40\n"
                     "simulate.steps = 50\nsimulate.trajectories = 400\n")
    out = tmp_path / "out"
    code = main(["fig3", "--side", "right", "--config", cfgfile,
                 "--out", str(out), "--simulate"])
    assert code == 0
    header, rows = _data_lines(out / "fig3_right_mc.csv")
    assert header == "t,logsnr,frechet_sq_closed,frechet_sq_mc"
    assert len(rows) == 5
    # capped scores change the starting law, so the cross-check refuses them
    capped = _write(tmp_path / "capped.cfg",
                    "grid.t_points = 40\nsimulate.score = capped\nsimulate.cap = 4.0\n")
    assert main(["fig3", "--side", "right", "--config", capped,
                 "--out", str(out), "--simulate"]) == 2


def test_cli_flag_overrides_reach_echo(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25\nseed = 3\n"
                     "simulate.steps = 40\nsimulate.trajectories = 300\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfgfile, "--out", str(out),
                 "--seed", "7", "--steps", "60", "--trajectories", "200"]) == 0
    lines = _echo_lines(out / "snapshots.csv")
    assert "seed = 7" in lines
    assert "simulate.steps = 60" in lines
    assert "simulate.trajectories = 200" in lines


def test_cli_reruns_are_byte_identical(tmp_path):
    cfgfile = _write(tmp_path / "run.cfg",
                     "spectrum.true = 1.0, 0.25\ngrid.t_points = 50\n")
    out = tmp_path / "out"

    def snapshot():
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    assert main(["curve", "--config", cfgfile, "--out", str(out)]) == 0
    first = snapshot()
    assert main(["curve", "--config", cfgfile, "--out", str(out)]) == 0
    assert snapshot() == first
    assert set(first) == {"curve.csv", "curve.png"}
