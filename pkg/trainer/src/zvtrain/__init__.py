"""Trainer and exporter companion to the zvpred inference engine."""

from .data import export_dataset, make_shape_dataset
from .model import ConfigError, PredictorSettings, SmallCNN, TrainConfig, export_zvpm
from .predictor import WindowZeroPredictor, window_keep_mask
from .train import (
    EvalStats,
    TrainOutcome,
    evaluate,
    run_training,
    to_tensors,
    train_epochs,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EvalStats",
    "PredictorSettings",
    "SmallCNN",
    "TrainConfig",
    "TrainOutcome",
    "WindowZeroPredictor",
    "evaluate",
    "export_dataset",
    "export_zvpm",
    "make_shape_dataset",
    "run_training",
    "to_tensors",
    "train_epochs",
    "window_keep_mask",
]
