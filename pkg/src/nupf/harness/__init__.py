"""Experiment harness: configuration, batch execution, metrics, CLI."""

from .config import (ExperimentConfig, config_dump, config_load, config_loads,
                     default_config)
from .engine import csv_write, execute_runs, run_seed_stream, summarize
from .experiments import (EXPERIMENTS, evidence_compare, list_experiments,
                          run_experiment)
from .metrics import nmse_vs_reference

__all__ = [
    "ExperimentConfig", "config_load", "config_loads", "config_dump",
    "default_config",
    "csv_write", "execute_runs", "run_seed_stream", "summarize",
    "EXPERIMENTS", "run_experiment", "list_experiments", "evidence_compare",
    "nmse_vs_reference",
]
