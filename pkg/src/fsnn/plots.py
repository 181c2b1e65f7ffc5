"""Figure rendering for the report-producing commands.

Every function writes a PNG next to the delimited tables; nothing here
feeds back into any computation.
"""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_trajectories",
    "plot_training_fit",
    "plot_link_profile",
    "plot_error_envelopes",
    "plot_error_by_sum",
]

_SAVE_OPTS = {"dpi": 110, "metadata": {"Software": None}}


def plot_trajectories(trajectories, path, title="State trajectories"):
    fig, axes = plt.subplots(1, len(trajectories), figsize=(11, 3.6),
                             sharey=True, squeeze=False)
    for ax, traj in zip(axes[0], trajectories):
        for i, name in enumerate(traj.state_names):
            ax.plot(traj.times, traj.samples[:, i], label=name)
        ax.set_xlabel("time")
        ax.grid(alpha=0.3)
    axes[0, 0].set_ylabel("state value")
    axes[0, 0].legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def plot_training_fit(datasets, model_trajectories, path):
    """Observed samples (dots) against the fitted model's curves (lines)."""
    fig, axes = plt.subplots(1, len(datasets), figsize=(11, 3.6),
                             sharey=True, squeeze=False)
    for ax, ds, sim in zip(axes[0], datasets, model_trajectories):
        obs = ds.trajectory
        for i, name in enumerate(obs.state_names):
            color = f"C{i}"
            ax.plot(obs.times, obs.samples[:, i], ".", ms=3, color=color)
            ax.plot(sim.times, sim.samples[:, i], "-", lw=1, color=color,
                    label=name)
        ax.set_xlabel("time")
        ax.set_title("init " + ",".join(_short(v) for v in ds.initialization),
                     fontsize=9)
        ax.grid(alpha=0.3)
    axes[0, 0].set_ylabel("state value")
    axes[0, 0].legend(fontsize=8)
    fig.suptitle("Training fit: observed (dots) vs model (lines)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def plot_link_profile(profile, path):
    """n x n grid of normalized link-score series, sources as rows."""
    names = profile.state_names
    n = len(names)
    fig, axes = plt.subplots(n, n, figsize=(3 * n, 2.2 * n),
                             sharex=True, sharey=True, squeeze=False)
    for j in range(n):
        for i in range(n):
            ax = axes[j][i]
            ax.axhline(0.0, color="gray", lw=0.6)
            ax.plot(profile.times, profile.normalized[:, j, i], lw=0.9)
            ax.set_title(f"{names[j]} → {names[i]}", fontsize=8)
            ax.grid(alpha=0.3)
    for i in range(n):
        axes[-1][i].set_xlabel("time")
    for j in range(n):
        axes[j][0].set_ylabel("normalized score")
    fig.suptitle("Link-score profile")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def plot_error_envelopes(report, path):
    """Cross-run 2.5/50/97.5 percentile error envelopes per state."""
    n = len(report.state_names)
    fig, axes = plt.subplots(1, n, figsize=(3.7 * n, 3.4), sharey=True,
                             squeeze=False)
    for i, (ax, name) in enumerate(zip(axes[0], report.state_names)):
        ax.fill_between(report.times, report.envelopes[0, :, i],
                        report.envelopes[2, :, i], alpha=0.3,
                        label="2.5–97.5%")
        ax.plot(report.times, report.envelopes[1, :, i], lw=1, label="median")
        ax.axhline(0.0, color="gray", lw=0.6)
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("time")
        ax.grid(alpha=0.3)
    axes[0, 0].set_ylabel("prediction error")
    axes[0, 0].legend(fontsize=8)
    fig.suptitle("Cross-run error envelopes")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def plot_error_by_sum(report, bins, path):
    """Per-run max abs error against the initial-state sum, with bin medians."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    # a log axis needs positive data; an all-zero self-check stays linear
    if (report.max_abs_errors > 0).any():
        ax.set_yscale("log")
    ax.plot(report.init_sums, report.max_abs_errors, ".", ms=4,
            alpha=0.6, label="runs")
    if bins:
        centers = [0.5 * (row["lo"] + row["hi"]) for row in bins]
        ax.plot(centers, [row["median"] for row in bins], "s-",
                color="C3", ms=5, label="bin median")
    ax.set_xlabel("initial-state sum")
    ax.set_ylabel("max abs error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.suptitle("Prediction error vs initialization sum")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _short(v: float) -> str:
    return f"{v:g}"
