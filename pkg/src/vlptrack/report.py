"""Figure rendering for sweep results, calibration tables, and route traces.

Everything draws through the Agg backend straight to files, so reports
work headless. The CSV emitted by the harness stays the authoritative
output; these figures are companions for quick inspection.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .availability import LayoutClass

_SCHEME_STYLE = {
    "none": dict(color="tab:gray", marker="x", label="unfiltered"),
    "conventional": dict(color="tab:blue", marker="o", label="conventional"),
    "fixed": dict(color="tab:orange", marker="s", label="adaptive, fixed"),
    "calibrated": dict(color="tab:green", marker="^", label="adaptive, calibrated"),
    "asymptotic": dict(color="tab:red", marker="v", label="adaptive, asymptotic"),
}


def plot_sweep(rows, xlabel: str, path) -> None:
    """RMSE curves per scheme over the sweep axis, saved to path."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    schemes = []
    for r in rows:
        if r.scheme not in schemes:
            schemes.append(r.scheme)
    for scheme in schemes:
        xs = [r.sweep_value for r in rows if r.scheme == scheme]
        ys = [r.rmse_m for r in rows if r.scheme == scheme]
        style = _SCHEME_STYLE.get(scheme, dict(marker="."))
        ax.plot(xs, ys, markersize=4.5, linewidth=1.2, **style)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("RMSE (m)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_calibration(table, path) -> None:
    """Mean localization error versus LED count, one line per layout class."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    counts = table.led_counts()
    for j in range(1, 6):
        ys = [table.mean_error_m.get((j, n), np.nan) for n in counts]
        ax.plot(counts, ys, marker="o", markersize=4,
                linewidth=1.2, label=LayoutClass(j).name.lower().replace("_", " "))
    ax.set_xlabel("LEDs per AP")
    ax.set_ylabel("mean localization error (m)")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trace(trace, room, path) -> None:
    """Top view of one route: truth, raw fixes, and each filtered track."""
    fig, ax = plt.subplots(figsize=(5.6, 5.6))
    truth = trace.route.step_points
    ax.plot(truth[:, 0], truth[:, 1], color="black", linewidth=1.6, label="truth")
    ok = ~np.isnan(trace.measured[:, 0])
    ax.plot(trace.measured[ok, 0], trace.measured[ok, 1], ".",
            color="tab:gray", markersize=2.5, alpha=0.5, label="raw fixes")
    for name, est in trace.estimates.items():
        if name == "none":
            continue
        style = _SCHEME_STYLE.get(name, dict())
        ax.plot(est[:, 0], est[:, 1], linewidth=1.1,
                color=style.get("color"), label=style.get("label", name))
    ax.set_xlim(0.0, room.width_m)
    ax.set_ylim(0.0, room.depth_m)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
