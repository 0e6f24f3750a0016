"""Opportunity-cost figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import ResultTable  # noqa: E402

STYLE = {
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.labelsize": 10,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": (5.5, 3.6),
    "savefig.dpi": 150,
}
LINESTYLES = {"kl": "-", "moment": "--", "moment-kl": "-.", "full": ":"}


def plot_opportunity_cost(table: ResultTable, path: str | Path, title: str | None = None,
                          band: bool = True) -> Path:
    """Mean opportunity cost per step, one line per rule, with a +/- 1 SE band."""
    path = Path(path)
    steps = np.arange(1, table.steps + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for rule, s in table.summaries.items():
            line, = ax.plot(steps, s.mean_cost, LINESTYLES.get(rule.value, "-"), lw=1.3, label=rule.label)
            if band and s.completed > 1:
                ax.fill_between(steps, s.mean_cost - s.stderr, s.mean_cost + s.stderr,
                                color=line.get_color(), alpha=0.15, lw=0)
        ax.set_xlabel("step")
        ax.set_ylabel("mean opportunity cost")
        ax.set_xlim(1, table.steps)
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title, fontsize=10)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
