"""Line charts of sweep results, written as SVG."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
colors = ["#08589e", "#d95f0e", "#31a354", "#756bb1", "#636363"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
    "figure.figsize": [fig_width, fig_width * golden],
    "svg.hashsalt": "hydrocert",  # stable element ids between runs
    "svg.fonttype": "none",
}


def line_chart(x: Sequence[float], series: Mapping[str, Sequence[float]], path: str | Path,
               xlabel: str, ylabel: str, logx: bool = False, logy: bool = False,
               title: str | None = None) -> Path:
    """Plot each series against ``x`` and save an SVG to ``path``.

    Non-finite points are skipped; so are non-positive ones on a log axis.
    """
    path = Path(path)
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
        for label, y in series.items():
            pts = [(a, b) for a, b in zip(x, y)
                   if math.isfinite(a) and math.isfinite(b)
                   and not (logx and a <= 0) and not (logy and b <= 0)]
            if pts:
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker="o", label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
