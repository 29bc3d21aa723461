"""Monte Carlo experiments on cokernels of random regular matrices."""

from .config import ExperimentConfig, Observable, load_config, parse_observable
from .experiment import TrialRecord, estimate_moment, measure, run_experiment, run_trial
from .stats import ComparisonReport, Prediction, compare, predictions_for, verdict, wilson_interval
from .summary import ExperimentSummary, MomentAccumulator

__all__ = [
    "ComparisonReport",
    "ExperimentConfig",
    "ExperimentSummary",
    "MomentAccumulator",
    "Observable",
    "Prediction",
    "TrialRecord",
    "compare",
    "estimate_moment",
    "load_config",
    "measure",
    "parse_observable",
    "predictions_for",
    "run_experiment",
    "run_trial",
    "verdict",
    "wilson_interval",
]
