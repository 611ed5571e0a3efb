"""Matplotlib rendering for the CLI report paths.

All figures are written headlessly and deterministically: the Agg backend is
forced before pyplot is imported, and every save strips the embedded
timestamp so identical runs produce byte-identical PNGs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "svg.hashsalt": "latentstop",
}


def _save(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def _axis_values(times, logsnrs, parameterization):
    if parameterization == "logsnr":
        return np.asarray(logsnrs), "log-SNR of the remaining forward time"
    return np.asarray(times), "backward time t"


def plot_curves(path, times, logsnrs, curves, parameterization, boundaries=None, title="distance curves"):
    """Per-dimension squared-distance curves, optionally with partition boundaries.

    curves: mapping d -> array of squared distances over the grid.
    boundaries: optional mapping d -> boundary time on the same axis.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        xs, xlabel = _axis_values(times, logsnrs, parameterization)
        for d in sorted(curves):
            ax.plot(xs, curves[d], label=f"d={d}", linewidth=1.0)
        if boundaries:
            for d, b in sorted(boundaries.items()):
                ax.axvline(b, color="gray", alpha=0.5, linewidth=0.7)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("squared distance to the target law")
        ax.set_yscale("log")
        ax.set_title(title)
        if len(curves) <= 12:
            ax.legend(loc="best", ncol=2)
        _save(fig, path)


def plot_partition(path, partitions, T, title="optimal-dimension partition"):
    """Step plot of boundary times per dimension for one or more partitions."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for part in partitions:
            ys = list(range(1, part.dims + 1)) + [part.dims]
            ax.step(part.boundaries, ys, where="post", label=part.variant, linewidth=1.2)
        ax.set_xlim(-0.02 * T, 1.02 * T)
        ax.set_xlabel("backward time t")
        ax.set_ylabel("optimal projection dimension")
        ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)


def plot_stopping(path, times, values, root_time, title="early-stopping objective"):
    """Distance curve for the chosen dimension with the stopping point marked."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(times, values, linewidth=1.2)
        if root_time is not None:
            ax.axvline(root_time, color="crimson", linestyle="--", linewidth=1.0,
                       label=f"stop at t={root_time:.4g}")
            ax.legend(loc="best")
        ax.set_xlabel("backward time t")
        ax.set_ylabel("squared distance to the target law")
        ax.set_title(title)
        _save(fig, path)


def plot_erm(path, dims, distance_rows, title="constrained-score dimension sweep"):
    """Distance versus dimension for each score cap in the sweep.

    distance_rows: list of (cap, distances, d_min) tuples.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for cap, distances, d_min in distance_rows:
            line, = ax.plot(dims, distances, marker="o", markersize=3,
                            linewidth=1.0, label=f"C={cap:g}")
            ax.plot([d_min], [distances[d_min - 1]], marker="*", markersize=11,
                    color=line.get_color(), linestyle="none")
        ax.set_xlabel("projection dimension d")
        ax.set_ylabel("terminal squared distance")
        ax.set_yscale("log")
        ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)


def plot_snapshots(path, rows, title="simulated vs analytic variances"):
    """Empirical per-component variances against their analytic values.

    rows: list of (t, component, empirical, analytic, stderr) tuples.
    """
    by_component: dict[int, list[tuple[float, float, float, float]]] = {}
    for t, comp, emp, ana, se in rows:
        by_component.setdefault(comp, []).append((t, emp, ana, se))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for comp in sorted(by_component):
            pts = sorted(by_component[comp])
            ts = [p[0] for p in pts]
            emp = [p[1] for p in pts]
            ana = [p[2] for p in pts]
            se = [p[3] for p in pts]
            line, = ax.plot(ts, ana, linewidth=1.0, label=f"component {comp}")
            ax.errorbar(ts, emp, yerr=[3 * s for s in se], color=line.get_color(),
                        fmt="o", markersize=3, capsize=2, linestyle="none")
        ax.set_xlabel("time")
        ax.set_ylabel("variance")
        ax.set_title(title)
        if len(by_component) <= 10:
            ax.legend(loc="best")
        _save(fig, path)


def plot_fig3(path, times, logsnrs, curves, parameterization, boundaries, argmin_curve,
              stop_time=None, title="distance curves with partition"):
    """Combined panel: curves, boundary markers, and the running argmin."""
    with plt.rc_context(_RC):
        fig, (ax, ax2) = plt.subplots(
            2, 1, sharex=True, figsize=(7.0, 6.0),
            gridspec_kw={"height_ratios": [3, 1]},
        )
        xs, xlabel = _axis_values(times, logsnrs, parameterization)
        for d in sorted(curves):
            ax.plot(xs, curves[d], label=f"d={d}", linewidth=1.0)
        for d, b in sorted(boundaries.items()):
            ax.axvline(b, color="gray", alpha=0.5, linewidth=0.7)
        if stop_time is not None:
            ax.axvline(stop_time, color="crimson", linestyle="--", linewidth=1.0)
        ax.set_ylabel("squared distance to the target law")
        ax.set_yscale("log")
        ax.set_title(title)
        if len(curves) <= 12:
            ax.legend(loc="best", ncol=3)
        ax2.step(xs, argmin_curve, where="post", linewidth=1.2, color="black")
        ax2.set_xlabel(xlabel)
        ax2.set_ylabel("argmin d")
        _save(fig, path)
