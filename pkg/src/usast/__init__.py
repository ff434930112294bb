"""Uncertainty-aware subsequence-transform classification of uncertain time series."""

from .core import (
    LabeledDataset,
    MultivariateInstance,
    Provenance,
    UncertainSeries,
    UncertainSubsequence,
    UncertainValue,
    VariantConfig,
    validate_dataset,
)
from .distance import MatchResult, UncertainScalar, dist_and_count, epsilon_similar, sliding_min_distance, ued
from .pipeline import TrainedModel, evaluate, load_model, predict, save_model, train

__version__ = "0.1.0"

__all__ = [
    "LabeledDataset",
    "MatchResult",
    "MultivariateInstance",
    "Provenance",
    "TrainedModel",
    "UncertainScalar",
    "UncertainSeries",
    "UncertainSubsequence",
    "UncertainValue",
    "VariantConfig",
    "dist_and_count",
    "epsilon_similar",
    "evaluate",
    "load_model",
    "predict",
    "save_model",
    "sliding_min_distance",
    "train",
    "ued",
    "validate_dataset",
]
