"""SVG line charts of aggregated series."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed element ids so identical data gives identical files
matplotlib.rcParams["svg.hashsalt"] = "splitkit"

AXIS_LABELS = {"epochs": "epochs", "cpu_seconds": "CPU time (s)"}
METRIC_LABELS = {
    "h": r"$h(x^k)$",
    "E_k": r"$E_k$",
    "phi": r"$\Phi_k$",
    "dist_sq": r"$\|x^k - x^*\|^2$",
}


def render_chart(series_list, output_path, xlabel: str | None = None,
                 ylabel: str | None = None, title: str | None = None, band: bool = True):
    """Write a log-scale line chart with one line per series and return the figure.

    The min/max envelope over seeds is shaded when ``band`` is true and the
    envelope is not degenerate. Nonpositive values are masked by the log
    scale.
    """
    if not series_list:
        raise ValueError("nothing to plot: no series given")
    first = series_list[0]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for s in series_list:
        (line,) = ax.plot(s.x, s.mean, label=s.label or "series", linewidth=1.5)
        if band and np.any(s.max > s.min):
            ax.fill_between(s.x, s.min, s.max, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel or AXIS_LABELS.get(first.axis, first.axis))
    ax.set_ylabel(ylabel or METRIC_LABELS.get(first.metric, first.metric))
    ax.set_title(title or f"Decay of {METRIC_LABELS.get(first.metric, first.metric)} "
                          f"with {AXIS_LABELS.get(first.axis, first.axis)}")
    ax.grid(True, which="major", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(output_path, format="svg", metadata={"Date": None})
    return fig
