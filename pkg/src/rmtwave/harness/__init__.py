"""Experiment drivers, configuration, reports and the command-line interface."""

from .checks import kwe_experiment, rigidity_experiment, weingarten_validate
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import (
    DeltaLimitReport,
    ExperimentReport,
    IkComparison,
    LotResult,
    Metric,
    StatisticalPowerError,
    WindowError,
    delta_limit_check,
    ik_consistency,
    ik_continuum,
    ik_deterministic_sum,
    ik_eigenvalue_sum,
    lot_expansion,
    lot_experiment,
    phi_kernel,
    theorem_experiment,
    theorem_window,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "DeltaLimitReport",
    "ExperimentReport",
    "IkComparison",
    "LotResult",
    "Metric",
    "StatisticalPowerError",
    "WindowError",
    "delta_limit_check",
    "ik_consistency",
    "ik_continuum",
    "ik_deterministic_sum",
    "ik_eigenvalue_sum",
    "lot_expansion",
    "lot_experiment",
    "phi_kernel",
    "theorem_experiment",
    "theorem_window",
    "kwe_experiment",
    "rigidity_experiment",
    "weingarten_validate",
]
