"""Turn per-seed traces into mean/min/max series on a shared x grid."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..trace import IterationTrace, format_value

AXES = ("epochs", "cpu_seconds")


@dataclass
class AggregateSeries:
    label: str
    metric: str
    axis: str
    x: np.ndarray
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray


def epoch_axis(trace: IterationTrace, metric: str = "h"):
    """``(epochs, metric)`` pairs, epochs being B-oracle calls divided by ``N``.

    Rows where the metric is absent are dropped.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    N = int(trace.meta["N"])
    x = trace.column("oracle_calls_B") / N
    y = trace.column(metric)
    keep = ~np.isnan(y)
    return x[keep], y[keep]


def cpu_axis(trace: IterationTrace, metric: str = "E_k"):
    x = trace.column("wall_time_s")
    y = trace.column(metric)
    keep = ~(np.isnan(y) | np.isnan(x))
    return x[keep], y[keep]


def _series(trace, metric, axis):
    if axis == "epochs":
        return epoch_axis(trace, metric)
    if axis == "cpu_seconds":
        return cpu_axis(trace, metric)
    raise ValueError(f"unknown axis {axis!r}")


def aggregate(traces, metric: str, axis: str = "epochs", label: str = "",
              n_points: int = 201) -> AggregateSeries | None:
    """Mean, min and max over traces, each held piecewise constant between records.

    The grid spans from the latest first record to the latest last record;
    traces that stop early (converged) keep their final value. Returns
    ``None`` when no trace carries the metric.
    """
    curves = [c for c in (_series(t, metric, axis) for t in traces) if c[0].size]
    if not curves:
        return None
    lo = max(float(x[0]) for x, _ in curves)
    hi = max(float(x[-1]) for x, _ in curves)
    grid = np.array([lo]) if hi <= lo else np.linspace(lo, hi, n_points)
    values = np.empty((len(curves), grid.size))
    for j, (x, y) in enumerate(curves):
        idx = np.searchsorted(x, grid, side="right") - 1
        values[j] = y[np.clip(idx, 0, None)]
    vmin, vmax = values.min(axis=0), values.max(axis=0)
    mean = np.clip(values.mean(axis=0), vmin, vmax)
    return AggregateSeries(label, metric, axis, grid, mean, vmin, vmax)


AGGREGATE_COLUMNS = ("label", "x", "mean", "min", "max")


def write_aggregate(path, series_list, comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for s in series_list:
            for row in zip(s.x, s.mean, s.min, s.max):
                writer.writerow([s.label] + [format_value(v) for v in row])


def read_aggregate(path, metric: str = "", axis: str = "") -> list:
    rows = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if tuple(header) != AGGREGATE_COLUMNS:
            raise ValueError(f"unexpected aggregate columns {header}")
        for label, *vals in reader:
            rows.setdefault(label, []).append([float(v) for v in vals])
    out = []
    for label, vals in rows.items():
        arr = np.array(vals)
        out.append(AggregateSeries(label, metric, axis, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]))
    return out
