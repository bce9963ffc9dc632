"""Objectives, optimizers, the training loop, and model persistence."""

from .loop import (
    LossReport,
    TrainConfig,
    TrainResult,
    evaluate_model,
    predict_dataset,
    train,
)
from .model import (
    FORMAT_VERSION,
    FusionModel,
    ModelConfig,
    build_model,
    load_model,
    save_model,
)
from .objectives import batch_cross_entropy, cross_entropy, one_hot
from .optim import Adam, SGD, make_optimizer

__all__ = [
    "Adam",
    "FORMAT_VERSION",
    "FusionModel",
    "LossReport",
    "ModelConfig",
    "SGD",
    "TrainConfig",
    "TrainResult",
    "batch_cross_entropy",
    "build_model",
    "cross_entropy",
    "evaluate_model",
    "load_model",
    "make_optimizer",
    "one_hot",
    "predict_dataset",
    "save_model",
    "train",
]
