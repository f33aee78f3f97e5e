"""Config-driven experiment runner, CSV output and command line."""
from .config import ConfigError, ExperimentConfig, default_config, load_config, parse_config
from .plotdata import emit_plot_data
from .runner import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, OutputLocked, RunResult, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "default_config", "load_config", "parse_config", "emit_plot_data",
           "EXIT_CONFIG", "EXIT_OK", "EXIT_VIOLATION", "OutputLocked", "RunResult", "run_experiment"]
