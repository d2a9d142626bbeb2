"""Figure rendering for traces and analysis reports.

All figures are written to files (SVG) with the Agg backend; nothing here
opens a display. Timestamps are stripped from the output so re-running a
scenario reproduces identical artifacts.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

matplotlib.rcParams["svg.hashsalt"] = "attitude-consensus"

_AXIS_NAMES = ("x", "y", "z")


def _save(fig, path: str):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _per_axis_figure(t, data, title: str, ylabel: str, path: str):
    """Three stacked subplots (x, y, z), one line per craft in each."""
    n = data.shape[1]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 8))
    for a in range(3):
        for i in range(n):
            axes[a].plot(t, data[:, i, a], label=f"craft {i + 1}")
        axes[a].set_ylabel(f"{ylabel} ({_AXIS_NAMES[a]})")
        axes[a].grid(True, alpha=0.3)
    axes[0].set_title(title)
    axes[0].legend(loc="best", fontsize="small")
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    _save(fig, path)


def trace_figures(trace, out_dir: str) -> list:
    """Write the per-quantity figures for a trace; returns the paths."""
    groups = [
        ("attitudes", trace.sigma, "spacecraft attitudes", "sigma"),
        ("attitude_rates", trace.sigma_dot, "spacecraft attitude rates",
         "sigma_dot [1/s]"),
        ("angular_velocities", trace.omega, "spacecraft angular velocities",
         "omega [rad/s]"),
        ("torques", trace.torque, "spacecraft control torques",
         "torque [N m]"),
    ]
    paths = []
    for stem, data, title, ylabel in groups:
        path = os.path.join(out_dir, f"{stem}.svg")
        _per_axis_figure(trace.t, data, title, ylabel, path)
        paths.append(path)

    path = os.path.join(out_dir, "consensus_error.svg")
    fig, ax = plt.subplots(figsize=(8, 5))
    positive = trace.error > 0.0
    if positive.any():
        ax.semilogy(trace.t[positive], trace.error[positive])
    else:
        ax.plot(trace.t, trace.error)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("consensus error norm")
    ax.set_title("consensus error")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
    paths.append(path)
    return paths


def delay_sweep_figure(report, path: str):
    """Log-log sweep of the delay bound with arg-min marker and asymptote."""
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.loglog(report.omega_grid, report.tau0_values, label="tau0(omega)")
    ax.axhline(report.asymptote, color="gray", linestyle="--",
               label=f"1/(1+gamma) = {report.asymptote:.4f}")
    ax.plot([report.argmin_omega], [report.tau0_bound], "o", color="red",
            label=f"infimum {report.tau0_bound:.4f} s")
    if report.reference_bound is not None:
        ax.axhline(report.reference_bound, color="orange", linestyle=":",
                   label=f"reference {report.reference_bound:.4f} s")
    ax.set_xlabel("omega [rad/s]")
    ax.set_ylabel("delay bound [s]")
    ax.set_title("small-gain delay bound sweep")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    _save(fig, path)
