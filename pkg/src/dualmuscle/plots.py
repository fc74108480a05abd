"""Static overlay figures drawn from a trajectory log (or its CSV)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simkit import TrajectoryLog  # noqa: E402

__all__ = ["plot_states", "plot_inputs", "plot_activations", "plot_all"]

_STYLE = {"hgo": ("tab:blue", "--"), "smo": ("tab:green", "-."), "asmo": ("tab:red", ":")}


def _overlay(ax, log, true_col, est, label):
    t = log.tau
    ax.plot(t, log[true_col], color="k", lw=1.2, label="true")
    for o in log.observers:
        color, ls = _STYLE[o]
        ax.plot(t, log[f"{o}_{est}"], color=color, ls=ls, lw=1.0, label=o.upper())
    ax.set_ylabel(label)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def plot_states(log: TrajectoryLog, path):
    fig, axes = plt.subplots(4, 1, figsize=(8, 9), sharex=True)
    for k, ax in enumerate(axes, 1):
        _overlay(ax, log, f"x{k}", f"xhat{k}", f"x{k}")
    axes[0].legend(loc="upper right", ncol=4, fontsize=8)
    axes[-1].set_xlabel("tau")
    return _save(fig, path)


def plot_inputs(log: TrajectoryLog, path):
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    _overlay(axes[0], log, "u1", "uhat1", "u1")
    _overlay(axes[1], log, "u2", "uhat2", "u2")
    _overlay(axes[2], log, "delta", "delta_hat", "delta")
    axes[0].legend(loc="upper right", ncol=4, fontsize=8)
    axes[-1].set_xlabel("tau")
    return _save(fig, path)


def plot_activations(log: TrajectoryLog, path):
    fig, axes = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    _overlay(axes[0], log, "a1", "ahat1", "a1")
    _overlay(axes[1], log, "a2", "ahat2", "a2")
    for ax in axes:
        ax.set_ylim(-0.1, 1.1)
    axes[0].legend(loc="upper right", ncol=4, fontsize=8)
    axes[-1].set_xlabel("tau")
    return _save(fig, path)


def plot_all(log, outdir):
    """Write states.png, inputs.png and activations.png; ``log`` may be a CSV path."""
    if not isinstance(log, TrajectoryLog):
        log = TrajectoryLog.from_csv(log)
    out = Path(outdir)
    return [plot_states(log, out / "states.png"),
            plot_inputs(log, out / "inputs.png"),
            plot_activations(log, out / "activations.png")]
