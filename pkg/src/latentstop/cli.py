"""Command-line front end: curve sweeps, partitions, stopping, the capped-score
dimension search, Monte-Carlo checks, and the two-panel synthetic benchmark.

Every command resolves one ExperimentConfig (defaults, then the --config file,
then flags), writes CSV/JSON/PNG files into the output directory, and echoes
the fully resolved config as `# key = value` comment lines at the top of each
CSV so a run can be reproduced from any of its outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import figures
from .config import (
    ConfigError,
    ExperimentConfig,
    config_lines,
    copy_config,
    parse_config_text,
    validate_config,
)
from .erm import d1_d2, d_min_search, make_constrained_score, variance_ode_path, write_distance_table
from .estimation import empirical_variances, epsilon_u, s_of_sigma, sample_gaussian
from .frechet import GaussianModel, Spectrum
from .partition import (
    distance_sq_at,
    distance_sq_grid,
    exact_partition,
    plugin_partition,
    robust_partition,
    stopping_time,
    write_partition_csv,
)
from .schedule import NoiseSchedule, log_snr, logsnr_time_grid, make_ou_schedule
from .simulate import SimConfig, empirical_frechet, simulate_backward, write_snapshot_csv

FIG3_LEFT_SPECTRUM = tuple(0.6**k for k in range(7)) + (1e-10, 1e-10)
FIG3_RIGHT_SPECTRUM = (10.0, 0.2, 0.2, 0.2, 0.0, 0.0)

_DOCS = {
    "curve": (
        "Per-dimension squared-distance curves over a time grid.\n"
        "Writes curve.csv (t, logsnr, frechet_sq_d1..frechet_sq_dD, argmin_d)\n"
        "and curve.png."
    ),
    "partition": (
        "Optimal-dimension interval boundaries.\n"
        "Writes partition.csv (d, boundary_time, boundary_logsnr, variant, u)\n"
        "with the exact and plug-in variants, plus robust-lower/robust-upper\n"
        "when robust.n and robust.u are configured (then also\n"
        "partition_summary.json with the interleaving flag), and partition.png."
    ),
    "stopping": (
        "Optimal early-stopping offset for one projection dimension.\n"
        "Writes stopping_curve.csv (t, logsnr, frechet_sq), stopping.json\n"
        "(d0, delta, stop_time, root_a2, condition_sum, monotone, clamped)\n"
        "and stopping.png."
    ),
    "erm": (
        "Capped-score dimension selection for each cap in erm.c_sweep.\n"
        "Writes erm_summary.csv (C, d1, d2, d_min), one\n"
        "erm_table_C<cap>.csv (d, sqrt_V, sigma, frechet_sq) per cap, and erm.png."
    ),
    "simulate": (
        "Euler-Maruyama backward pass cross-checked against the closed forms.\n"
        "Writes snapshots.csv (t, component, empirical_variance,\n"
        "analytic_variance, stderr), simulate_summary.csv (t,\n"
        "frechet_sq_empirical, frechet_sq_closed) and simulate.png."
    ),
    "fig3": (
        "Two-panel synthetic benchmark over the built-in spectra.\n"
        "Writes fig3_<side>_curves.csv (as curve.csv), fig3_<side>_partition.csv\n"
        "(as partition.csv), fig3_<side>_summary.json (t_star, d_star, ...),\n"
        "fig3_<side>.png, and with --simulate also fig3_<side>_mc.csv\n"
        "(t, logsnr, frechet_sq_closed, frechet_sq_mc)."
    ),
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="`key = value` config file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--seed", type=int, metavar="N", help="simulation seed override")
    common.add_argument("--simulate", action="store_true", default=None,
                        help="add Monte-Carlo cross-check columns where supported")
    common.add_argument("--steps", type=int, metavar="K", help="Euler-Maruyama step count")
    common.add_argument("--trajectories", type=int, metavar="N", help="Monte-Carlo sample count")

    parser = argparse.ArgumentParser(
        prog="latentstop",
        description="Closed-form early stopping and latent-dimension selection "
        "for Gaussian diffusion, with Monte-Carlo cross-checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("curve", "partition", "stopping", "erm", "simulate"):
        sub.add_parser(name, parents=[common], help=_DOCS[name].splitlines()[0],
                       description=_DOCS[name],
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    fig3 = sub.add_parser("fig3", parents=[common], help=_DOCS["fig3"].splitlines()[0],
                          description=_DOCS["fig3"],
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    fig3.add_argument("--side", choices=("left", "right"), required=True,
                      help="which built-in configuration to run")
    return parser


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config file {args.config}: {exc}") from exc
        parse_config_text(text, cfg, where=args.config)
    cfg.mode = args.command if args.command != "fig3" else f"fig3-{args.side}"
    if args.out is not None:
        cfg.outputs = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.simulate:
        cfg.sim_mc = True
    if args.steps is not None:
        cfg.sim_steps = args.steps
    if args.trajectories is not None:
        cfg.sim_trajectories = args.trajectories
    validate_config(cfg)
    return cfg


def _outdir(cfg: ExperimentConfig) -> str:
    try:
        os.makedirs(cfg.outputs, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {cfg.outputs}: {exc}") from exc
    return cfg.outputs


def _resolve_spectra(cfg: ExperimentConfig) -> tuple[Spectrum, Spectrum]:
    """True and estimated spectra; the estimate falls back to sampling with
    {spectrum.n, spectrum.seed}, or to the oracle when nothing is configured."""
    if cfg.spectrum_true is None:
        raise ConfigError(f"spectrum.true is required for mode {cfg.mode!r}")
    true_spec = Spectrum.from_unsorted(cfg.spectrum_true, flavor="true")
    if true_spec.was_reordered:
        print("note: spectrum.true entries were re-sorted into non-increasing order")
    if cfg.spectrum_estimated is not None:
        est = Spectrum.from_unsorted(cfg.spectrum_estimated, flavor="estimated")
    elif cfg.spectrum_n is not None:
        model = GaussianModel.from_spectrum(true_spec)
        est = empirical_variances(sample_gaussian(model, cfg.spectrum_n, cfg.spectrum_seed))
    else:
        est = Spectrum(true_spec.variances, flavor="estimated")
    if len(est) != len(true_spec):
        raise ConfigError(
            f"spectrum.estimated has {len(est)} entries, spectrum.true has {len(true_spec)}"
        )
    return true_spec, est


def _time_grid(cfg: ExperimentConfig, s: NoiseSchedule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward times ascending, matching log-SNR values, and x = a2(T - t)."""
    if cfg.grid_parameterization == "logsnr":
        taus, snrs = logsnr_time_grid(s, cfg.grid_t_points)
        t = (s.T - taus)[::-1]
        snr = snrs[::-1]
        x = np.asarray(s.a2(taus))[::-1]
        return t, snr, x
    t = np.linspace(0.0, s.T, cfg.grid_t_points)
    tau = s.T - t
    snr = np.full_like(t, math.inf)
    mask = tau > 0.0
    snr[mask] = np.asarray(log_snr(s, tau[mask]))
    x = np.asarray(s.a2(tau))
    return t, snr, x


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: str, cfg: ExperimentConfig, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in config_lines(cfg):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _boundary_snr(s: NoiseSchedule, t: float) -> float:
    forward = s.T - t
    return math.inf if forward <= 0.0 else float(log_snr(s, forward))


def _plot_boundaries(s: NoiseSchedule, part, parameterization: str) -> dict[int, float]:
    """Boundary positions on the plotting axis; drops off-axis values."""
    out = {}
    for d, t in enumerate(part.boundaries[:-1], start=1):
        if d == 1:
            continue
        value = t if parameterization == "time" else _boundary_snr(s, t)
        if math.isfinite(value):
            out[d] = value
    return out


def _curve_rows(t, snr, M, argmin):
    for i in range(len(t)):
        yield [t[i], snr[i], *M[i], int(argmin[i])]


def run_curve(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    t, snr, x = _time_grid(cfg, s)
    M = distance_sq_grid(true_spec, est, x)
    argmin = np.argmin(M, axis=1) + 1
    D = len(true_spec)
    header = ["t", "logsnr"] + [f"frechet_sq_d{d}" for d in range(1, D + 1)] + ["argmin_d"]
    csv_path = os.path.join(out, "curve.csv")
    _write_csv(csv_path, cfg, header, _curve_rows(t, snr, M, argmin))
    part = plugin_partition(s, true_spec, est)
    png_path = os.path.join(out, "curve.png")
    figures.plot_curves(
        png_path, t, snr, {d: M[:, d - 1] for d in range(1, D + 1)},
        cfg.grid_parameterization, boundaries=_plot_boundaries(s, part, cfg.grid_parameterization),
    )
    print(f"wrote {csv_path}")
    print(f"wrote {png_path}")


def run_partition(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    parts = [exact_partition(s, true_spec), plugin_partition(s, true_spec, est)]
    robust_summary = None
    if (cfg.robust_n is None) != (cfg.robust_u is None):
        raise ConfigError("robust.n and robust.u must be set together")
    if cfg.robust_n is not None:
        eps = epsilon_u(cfg.robust_n, len(est), cfg.robust_u, cfg.robust_cuniv)
        ssigma = s_of_sigma(est)
        rp = robust_partition(s, est, ssigma, eps, u=cfg.robust_u)
        parts.extend([rp.lower, rp.upper])
        robust_summary = {"eps_u": eps, "s_sigma": ssigma, "interleaved": rp.interleaved}
        print(f"robust boundaries interleave strictly: {rp.interleaved}")
    csv_path = os.path.join(out, "partition.csv")
    write_partition_csv(csv_path, parts, s, comments=tuple(config_lines(cfg)))
    print(f"wrote {csv_path}")
    if robust_summary is not None:
        json_path = os.path.join(out, "partition_summary.json")
        _write_json(json_path, robust_summary)
        print(f"wrote {json_path}")
    png_path = os.path.join(out, "partition.png")
    figures.plot_partition(png_path, parts, s.T)
    print(f"wrote {png_path}")


def run_stopping(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    if cfg.stopping_d0 is None:
        positive = sum(1 for v in true_spec.variances if v > 0.0)
        cfg.stopping_d0 = max(positive, 1)
    d0 = cfg.stopping_d0
    if d0 > len(true_spec):
        raise ConfigError(f"stopping.d0 = {d0} exceeds the spectrum size {len(true_spec)}")
    res = stopping_time(s, true_spec, est, d0)
    t, snr, x = _time_grid(cfg, s)
    M = distance_sq_grid(true_spec, est, x)
    values = M[:, d0 - 1]
    csv_path = os.path.join(out, "stopping_curve.csv")
    _write_csv(csv_path, cfg, ["t", "logsnr", "frechet_sq"],
               ([t[i], snr[i], values[i]] for i in range(len(t))))
    summary = {
        "d0": d0,
        "delta": res.delta,
        "stop_time": res.stop_time,
        "root_a2": None if math.isnan(res.root_a2) else res.root_a2,
        "condition_sum": res.condition_sum,
        "monotone": res.monotone,
        "clamped": res.clamped,
        "frechet_sq_at_stop": distance_sq_at(s, true_spec, est, d0, res.stop_time),
        "config": config_lines(cfg),
    }
    json_path = os.path.join(out, "stopping.json")
    _write_json(json_path, summary)
    png_path = os.path.join(out, "stopping.png")
    figures.plot_stopping(png_path, t, values, res.stop_time)
    print(f"optimal stop for d0={d0}: t = {res.stop_time!r} (delta = {res.delta!r})")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"wrote {png_path}")


def run_erm(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    D = len(true_spec)
    summary_rows = []
    plot_rows = []
    table_paths = []
    for cap in cfg.erm_c_sweep:
        cs = make_constrained_score(cap, est, s.T)
        result = d_min_search(cs, true_spec)
        lo, hi = d1_d2(true_spec, est, cap)
        summary_rows.append([cap, lo, hi, result.d_min])
        plot_rows.append((cap, result.distances, result.d_min))
        table_path = os.path.join(out, f"erm_table_C{cap:g}.csv")
        write_distance_table(table_path, result, true_spec, comments=tuple(config_lines(cfg)))
        table_paths.append(table_path)
    csv_path = os.path.join(out, "erm_summary.csv")
    _write_csv(csv_path, cfg, ["C", "d1", "d2", "d_min"], summary_rows)
    png_path = os.path.join(out, "erm.png")
    figures.plot_erm(png_path, list(range(1, D + 1)), plot_rows)
    print(f"wrote {csv_path}")
    for p in table_paths:
        print(f"wrote {p}")
    print(f"wrote {png_path}")


def _analytic_variance_fn(cfg: ExperimentConfig, s: NoiseSchedule, score_spec: Spectrum, d: int):
    """Per-component backward-marginal variances at backward time t (length D)."""
    D = len(score_spec)
    if cfg.sim_score == "capped":
        cs = make_constrained_score(cfg.sim_cap, score_spec, s.T)
        paths = [variance_ode_path(cs, j) for j in range(1, d + 1)]

        def at(t: float) -> np.ndarray:
            head = np.array([float(np.interp(t, ts, vs)) for ts, vs in paths])
            return np.concatenate([head, np.zeros(D - d)])

        return at

    v = score_spec.as_array()[:d]

    def at(t: float) -> np.ndarray:
        tau = s.T - t
        head = float(s.a2(tau)) + float(s.b2(tau)) * v
        return np.concatenate([head, np.zeros(D - d)])

    return at


def run_simulate(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    score_spec = true_spec if cfg.sim_score == "exact" else est
    D = len(true_spec)
    d = cfg.sim_dim if cfg.sim_dim is not None else D
    if not 1 <= d <= D:
        raise ConfigError(f"simulate.dim must be in 1..{D}, got {d}")
    stop = cfg.sim_stop_time if cfg.sim_stop_time is not None else s.T
    if cfg.sim_snapshots is None:
        cfg.sim_snapshots = tuple(stop * k / 5.0 for k in range(1, 6))
    sim = SimConfig(
        schedule=s,
        spectrum=score_spec,
        steps=cfg.sim_steps,
        trajectories=cfg.sim_trajectories,
        seed=cfg.seed,
        score_kind=cfg.sim_score,
        cap=cfg.sim_cap if cfg.sim_score == "capped" else None,
        projection_dim=cfg.sim_dim,
        stop_time=cfg.sim_stop_time,
    )
    result = simulate_backward(sim, snapshot_times=cfg.sim_snapshots)
    analytic_at = _analytic_variance_fn(cfg, s, score_spec, d)
    n = cfg.sim_trajectories
    snap_rows = []
    for t_snap, samples in result.snapshots:
        emp = np.mean(np.asarray(samples.data) ** 2, axis=0)
        ana = analytic_at(t_snap)
        se = ana * math.sqrt(2.0 / n)
        for j in range(D):
            snap_rows.append((t_snap, j + 1, float(emp[j]), float(ana[j]), float(se[j])))
    csv_path = os.path.join(out, "snapshots.csv")
    write_snapshot_csv(csv_path, snap_rows, comments=tuple(config_lines(cfg)))

    final_t = result.final_time
    emp_frechet = empirical_frechet(result.final, GaussianModel.from_spectrum(true_spec))
    ana_final = analytic_at(final_t)
    closed = float(np.sum((np.sqrt(ana_final) - np.array(true_spec.sigmas)) ** 2))
    summary_path = os.path.join(out, "simulate_summary.csv")
    _write_csv(summary_path, cfg, ["t", "frechet_sq_empirical", "frechet_sq_closed"],
               [[final_t, emp_frechet, closed]])
    png_path = os.path.join(out, "simulate.png")
    figures.plot_snapshots(png_path, snap_rows)
    print(f"final time {final_t!r}: empirical frechet_sq = {emp_frechet!r}, closed form = {closed!r}")
    print(f"wrote {csv_path}")
    print(f"wrote {summary_path}")
    print(f"wrote {png_path}")


def run_fig3(cfg: ExperimentConfig) -> None:
    cfg = copy_config(cfg)
    side = "left" if cfg.mode == "fig3-left" else "right"
    if cfg.spectrum_true is None:
        cfg.spectrum_true = FIG3_LEFT_SPECTRUM if side == "left" else FIG3_RIGHT_SPECTRUM
    if side == "right" and cfg.spectrum_estimated is None and cfg.spectrum_n is None:
        cfg.spectrum_n = 1000
    out = _outdir(cfg)
    s = make_ou_schedule(cfg.schedule_T)
    true_spec, est = _resolve_spectra(cfg)
    D = len(true_spec)

    t, snr, x = _time_grid(cfg, s)
    M = distance_sq_grid(true_spec, est, x)
    argmin = np.argmin(M, axis=1) + 1
    header = ["t", "logsnr"] + [f"frechet_sq_d{d}" for d in range(1, D + 1)] + ["argmin_d"]
    curves_path = os.path.join(out, f"fig3_{side}_curves.csv")
    _write_csv(curves_path, cfg, header, _curve_rows(t, snr, M, argmin))

    parts = [exact_partition(s, true_spec), plugin_partition(s, true_spec, est)]
    part_path = os.path.join(out, f"fig3_{side}_partition.csv")
    write_partition_csv(part_path, parts, s, comments=tuple(config_lines(cfg)))

    i_star, j_star = np.unravel_index(np.argmin(M), M.shape)
    summary = {
        "side": side,
        "t_star": float(t[i_star]),
        "logsnr_star": float(snr[i_star]),
        "d_star": int(j_star) + 1,
        "min_frechet_sq": float(M[i_star, j_star]),
        "config": config_lines(cfg),
    }
    stop_axis = None
    if side == "right":
        d0 = max(sum(1 for v in true_spec.variances if v > 0.0), 1)
        res = stopping_time(s, true_spec, est, d0)
        summary.update({
            "d0": d0,
            "delta": res.delta,
            "stop_time": res.stop_time,
            "monotone": res.monotone,
            "clamped": res.clamped,
        })
        stop_axis = res.stop_time if cfg.grid_parameterization == "time" else _boundary_snr(s, res.stop_time)
        if not math.isfinite(stop_axis):
            stop_axis = None
    summary_path = os.path.join(out, f"fig3_{side}_summary.json")
    _write_json(summary_path, summary)

    png_path = os.path.join(out, f"fig3_{side}.png")
    figures.plot_fig3(
        png_path, t, snr, {d: M[:, d - 1] for d in range(1, D + 1)},
        cfg.grid_parameterization,
        _plot_boundaries(s, parts[1], cfg.grid_parameterization),
        argmin, stop_time=stop_axis,
        title=f"distance curves ({side} configuration)",
    )
    written = [curves_path, part_path, summary_path, png_path]

    if cfg.sim_mc:
        if cfg.sim_score == "capped":
            raise ConfigError("fig3 Monte-Carlo cross-checks support simulate.score exact|plugin only")
        d_star = int(j_star) + 1
        score_spec = true_spec if cfg.sim_score == "exact" else est
        dist_est = true_spec if cfg.sim_score == "exact" else est
        target = GaussianModel.from_spectrum(true_spec)
        idxs = sorted({int(round(i)) for i in np.linspace(0, len(t) - 1, 5)})
        mc_rows = []
        for i in idxs:
            sim = SimConfig(
                schedule=s, spectrum=score_spec, steps=cfg.sim_steps,
                trajectories=cfg.sim_trajectories, seed=cfg.seed,
                score_kind=cfg.sim_score, projection_dim=d_star, stop_time=float(t[i]),
            )
            r = simulate_backward(sim)
            closed = distance_sq_at(s, true_spec, dist_est, d_star, r.final_time)
            mc = empirical_frechet(r.final, target)
            mc_rows.append([r.final_time, _boundary_snr(s, r.final_time), closed, mc])
        mc_path = os.path.join(out, f"fig3_{side}_mc.csv")
        _write_csv(mc_path, cfg, ["t", "logsnr", "frechet_sq_closed", "frechet_sq_mc"], mc_rows)
        written.append(mc_path)

    print(f"global minimum: d = {summary['d_star']} at t = {summary['t_star']!r}")
    if side == "right":
        print(f"stopping offset for d0={summary['d0']}: delta = {summary['delta']!r}")
    for p in written:
        print(f"wrote {p}")


_RUNNERS = {
    "curve": run_curve,
    "partition": run_partition,
    "stopping": run_stopping,
    "erm": run_erm,
    "simulate": run_simulate,
    "fig3-left": run_fig3,
    "fig3-right": run_fig3,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        _RUNNERS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
