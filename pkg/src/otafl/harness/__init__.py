"""Configuration, experiment orchestration, and the command-line interface."""

from .config import (
    ArrayConfig,
    ConfigurationError,
    ExperimentConfig,
    FlBoundConfig,
    PowerConfig,
    RunConfig,
    default_config,
    load_config,
    parse_overrides,
    resolved_items,
)
from .experiments import run_sweep, run_training, trailing_average, verify_bound

__all__ = [
    "ArrayConfig",
    "ConfigurationError",
    "ExperimentConfig",
    "FlBoundConfig",
    "PowerConfig",
    "RunConfig",
    "default_config",
    "load_config",
    "parse_overrides",
    "resolved_items",
    "run_sweep",
    "run_training",
    "trailing_average",
    "verify_bound",
]
