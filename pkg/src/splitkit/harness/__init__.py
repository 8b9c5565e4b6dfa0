"""Experiment harness: configs, run matrices, aggregation and charts."""

from .aggregate import AggregateSeries, aggregate, epoch_axis
from .config import ConfigError, ExperimentConfig, ProblemSpec, RunControls, SolverSpec
from .experiment import run_experiment
from .plotting import render_chart
