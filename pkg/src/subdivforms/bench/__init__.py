"""Experiment harness: verification, projection, Maxwell, timing and plots."""

from .config import ExperimentConfig, parse_levels, parse_pairs, read_config
from .maxwell import (
    MaxwellResult,
    TimingRecord,
    analytic_eigenvalues,
    mean_deviation,
    run_maxwell,
    run_timing,
)
from .plots import emit_plots
from .projection import ProjectionResult, run_projection
from .verify import VerifyReport, run_verify

__all__ = [
    "ExperimentConfig",
    "MaxwellResult",
    "ProjectionResult",
    "TimingRecord",
    "VerifyReport",
    "analytic_eigenvalues",
    "emit_plots",
    "mean_deviation",
    "parse_levels",
    "parse_pairs",
    "read_config",
    "run_maxwell",
    "run_projection",
    "run_timing",
    "run_verify",
]
