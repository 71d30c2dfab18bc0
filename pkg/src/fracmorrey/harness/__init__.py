"""Experiment runners, configuration, reports and the command-line interface."""

from .config import ConfigError, ExperimentConfig, from_dict, load_config
from .experiments import run, run_adams, run_cor3, run_examples, run_kernel_suite, run_thm1, run_thm2
from .report import ExperimentReport, merge_reports

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "from_dict",
    "load_config",
    "merge_reports",
    "run",
    "run_adams",
    "run_cor3",
    "run_examples",
    "run_kernel_suite",
    "run_thm1",
    "run_thm2",
]
