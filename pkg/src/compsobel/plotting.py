"""Figure output for the CLI report and detect paths."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .resources import PAPER_REFERENCE

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def plot_resources(reports, path):
    """Modeled vs published LEs next to modeled path levels vs published fmax."""
    labels = [r.variant.label for r in reports]
    x = np.arange(len(reports))
    modeled = [r.total_les for r in reports]
    paper = [PAPER_REFERENCE[r.variant.value]["total_les"] for r in reports]
    levels = [r.path_levels for r in reports]
    fmax = [PAPER_REFERENCE[r.variant.value]["fmax_mhz"] for r in reports]

    with plt.rc_context(_RC):
        fig, (ax_le, ax_path) = plt.subplots(1, 2, figsize=(8, 3.2))
        ax_le.bar(x - 0.2, modeled, 0.4, label="model", color="0.35")
        ax_le.bar(x + 0.2, paper, 0.4, label="published", color="0.75")
        ax_le.set_xticks(x, labels, rotation=20, ha="right")
        ax_le.set_ylabel("total LEs")
        ax_le.legend(frameon=False)

        ax_path.bar(x, levels, 0.5, color="0.35")
        ax_path.set_xticks(x, labels, rotation=20, ha="right")
        ax_path.set_ylabel("critical path (LE levels)")
        twin = ax_path.twinx()
        twin.plot(x, fmax, "o--", color="tab:red")
        twin.set_ylabel("published fmax (MHz)", color="tab:red")

        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_edges(image, edges, path):
    """Input and edge image side by side."""
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 2, figsize=(7, 3.6))
        for ax, data, title in zip(axes, (image, edges), ("input", "edges")):
            ax.imshow(data, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
            ax.set_title(title)
            ax.set_axis_off()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
