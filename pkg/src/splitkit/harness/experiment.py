"""Run a (solver x seed) experiment matrix and write traces, aggregates and charts.

Output layout under ``cfg.output``::

    config.yaml                      resolved configuration
    traces/<label>_seed<NNN>.csv     one trace per run
    summary.csv                      termination reason and final values per run
    aggregate_<metric>_<axis>.csv    mean/min/max over seeds per solver
    <metric>_<axis>.svg              chart of the aggregate

Instances and solver streams are derived from the master seed only, so a
repeated invocation reproduces every file byte for byte (wall times are only
recorded when ``run.timing`` is enabled).
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import matplotlib.pyplot as plt

from ..problems import generate_saddle, generate_strong
from ..sampling import derive_seed
from ..solvers import FbhfConfig, VrfbhfConfig, run
from ..trace import IterationTrace, format_value
from .aggregate import AXES, aggregate, write_aggregate
from .config import METRICS, ConfigError, ExperimentConfig
from .plotting import render_chart

logger = logging.getLogger(__name__)

PROBLEM_STREAM = 0


def problem_seed(cfg: ExperimentConfig, seed_index: int) -> int:
    if cfg.problem.seed is not None:
        return cfg.problem.seed
    return derive_seed(cfg.run.seed, seed_index, PROBLEM_STREAM)


def solver_seed(cfg: ExperimentConfig, seed_index: int, solver_index: int) -> int:
    return derive_seed(cfg.run.seed, seed_index, 1 + solver_index)


def build_problem(cfg: ExperimentConfig, seed_index: int = 0):
    pb = cfg.problem
    seed = problem_seed(cfg, seed_index)
    if pb.kind == "saddle":
        t = pb.t if pb.t is not None else pb.d // 2
        return generate_saddle(pb.d, pb.q, t, seed=seed, strict_ratio=False, split=pb.split)
    return generate_strong(pb.dim, pb.mu, pb.c0, seed=seed, target_ratio=pb.target_ratio)


def build_solver(cfg: ExperimentConfig, solver_index: int, seed_index: int = 0):
    spec = cfg.solvers[solver_index]
    r = cfg.run
    if spec.solver == "fbhf":
        return FbhfConfig(gamma=spec.gamma, max_epochs=r.max_epochs, tol=r.tol)
    return VrfbhfConfig(lam=spec.lam, p=spec.p, gamma=spec.gamma,
                        gamma_fraction=spec.gamma_fraction, scheme=spec.scheme,
                        max_epochs=r.max_epochs, tol=r.tol,
                        seed=solver_seed(cfg, seed_index, solver_index))


def run_single(cfg: ExperimentConfig, solver_index: int, seed_index: int) -> IterationTrace:
    """Execute one (solver, seed) run and return its trace."""
    problem = build_problem(cfg, seed_index)
    solver = build_solver(cfg, solver_index, seed_index)
    objective = problem.objective if cfg.problem.kind == "saddle" else None
    result = run(problem, solver, objective=objective, record_every=cfg.run.record_every,
                 timing=cfg.run.timing)
    trace = result.trace
    trace.meta = {"label": cfg.solvers[solver_index].name, "seed_index": seed_index,
                  "problem_seed": problem_seed(cfg, seed_index), **trace.meta}
    return trace


def _run_task(args):
    text, solver_index, seed_index = args
    return run_single(ExperimentConfig.from_text(text), solver_index, seed_index)


@dataclass
class ExperimentResult:
    traces: dict = field(default_factory=dict)  # (label, seed_index) -> IterationTrace
    aggregates: dict = field(default_factory=dict)  # (metric, axis) -> [AggregateSeries]
    files: list = field(default_factory=list)


def trace_filename(label: str, seed_index: int) -> str:
    return f"{label}_seed{seed_index:03d}.csv"


def check_config(cfg: ExperimentConfig) -> None:
    """Resolve every solver against the first instance; raise ConfigError if inadmissible."""
    cfg.validate()
    problem = build_problem(cfg, 0)
    for j, spec in enumerate(cfg.solvers):
        try:
            build_solver(cfg, j).resolve(problem)
        except ValueError as exc:
            raise ConfigError(f"solvers.{j} ({spec.name}): {exc}") from None


def aggregate_traces(cfg: ExperimentConfig, traces: dict) -> dict:
    axes = AXES if cfg.run.timing else ("epochs",)
    out = {}
    for metric in METRICS:
        for axis in axes:
            series = []
            for spec in cfg.solvers:
                runs = [t for (label, _), t in sorted(traces.items())
                        if label == spec.name and t.meta.get("termination") != "diverged"]
                s = aggregate(runs, metric, axis, label=spec.name)
                if s is not None:
                    series.append(s)
            if series:
                out[(metric, axis)] = series
    return out


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    check_config(cfg)
    tasks = [(j, s) for j in range(len(cfg.solvers)) for s in range(cfg.run.num_seeds)]
    if cfg.run.workers > 1:
        text = cfg.to_text()
        with ProcessPoolExecutor(max_workers=cfg.run.workers) as pool:
            traces = list(pool.map(_run_task, [(text, j, s) for j, s in tasks]))
    else:
        traces = [run_single(cfg, j, s) for j, s in tasks]

    result = ExperimentResult()
    for (j, s), trace in zip(tasks, traces):
        result.traces[(cfg.solvers[j].name, s)] = trace
    result.aggregates = aggregate_traces(cfg, result.traces)
    if write:
        _write_outputs(cfg, result)
    return result


def _write_outputs(cfg: ExperimentConfig, result: ExperimentResult) -> None:
    out = cfg.output
    os.makedirs(os.path.join(out, "traces"), exist_ok=True)
    path = os.path.join(out, "config.yaml")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    result.files.append(path)

    diverged = []
    summary_path = os.path.join(out, "summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "solver", "seed_index", "seed", "problem_seed", "termination",
                         "iterations", "epochs", "E_k", "h"])
        for (label, s), trace in sorted(result.traces.items()):
            path = os.path.join(out, "traces", trace_filename(label, s))
            trace.write(path)
            result.files.append(path)
            reason = trace.meta["termination"]
            if reason == "diverged":
                diverged.append(f"{label} seed {s} diverged")
            writer.writerow([label, trace.meta["solver"], s, format_value(trace.meta.get("seed")),
                             trace.meta["problem_seed"], reason, trace.last("k"),
                             format_value(trace.last("epochs")), format_value(trace.last("E_k")),
                             format_value(trace.last("h"))])
    result.files.append(summary_path)

    for (metric, axis), series in result.aggregates.items():
        path = os.path.join(out, f"aggregate_{metric}_{axis}.csv")
        comments = [f"metric={metric}", f"axis={axis}", f"seeds={cfg.run.num_seeds}"]
        comments += [f"excluded: {d}" for d in diverged]
        write_aggregate(path, series, comments)
        chart = os.path.join(out, f"{metric}_{axis}.svg")
        fig = render_chart(series, chart)
        plt.close(fig)
        result.files += [path, chart]
    logger.info("wrote %d files to %s", len(result.files), out)
