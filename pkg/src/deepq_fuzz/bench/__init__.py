"""Experiments and the command-line front end."""

from .experiments import (
    SWEEP_DIMENSIONS,
    aggregate_trials,
    compare_baseline,
    default_metric,
    generalization_run,
    improvement_quotient,
    last_half_sum,
    pearson,
    reward_correlation,
    sweep,
    with_changes,
)

__all__ = [
    "SWEEP_DIMENSIONS",
    "aggregate_trials",
    "compare_baseline",
    "default_metric",
    "generalization_run",
    "improvement_quotient",
    "last_half_sum",
    "pearson",
    "reward_correlation",
    "sweep",
    "with_changes",
]
