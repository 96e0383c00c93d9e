"""Figure rendering for experiment reports.

The CSV trace is the canonical output; the figure written next to it is a
convenience view of the same numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_metrics_figure(series, path, title: str = "") -> None:
    """Render the deviation traces of one experiment to an image file."""
    iters = np.arange(1, series.iterations + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(iters, series.msd_db, lw=1.2, label="MSD")
    if series.nmsd_db is not None:
        ax.plot(iters, series.nmsd_db, lw=1.2, ls="--", label="running normalized MSD")
    ax.set_xlabel("iteration")
    ax.set_ylabel("dB")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    if series.branch_full_fraction is not None:
        twin = ax.twinx()
        twin.plot(iters, series.branch_full_fraction, lw=0.8, color="tab:gray", alpha=0.6)
        twin.set_ylabel("exact-branch fraction", color="tab:gray")
        twin.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_comparison_figure(traces: dict[str, np.ndarray], path, ylabel: str = "MSD (dB)", title: str = "") -> None:
    """Overlay several labeled dB traces in one figure."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for label, values in traces.items():
        ax.plot(np.arange(1, len(values) + 1), values, lw=1.2, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
