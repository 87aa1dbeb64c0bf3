"""Experiment harness: configuration, registry, runner and report."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .experiments import REGISTRY, Check, ExperimentResult
from .runner import report, run_experiment

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "load_config", "REGISTRY", "Check",
           "ExperimentResult", "report", "run_experiment"]
