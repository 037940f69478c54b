"""Predictor training: linear family on TF-IDF and embedding models."""

from bridgecraft.models.split import DatasetSplit, split_dataset
from bridgecraft.models.linear import LinearModel, train_linear
from bridgecraft.models.evaluate import EvalReport, evaluate
from bridgecraft.models.search import Trial, hyperparam_search
from bridgecraft.models.neural import (
    NeuralConfig,
    NeuralModel,
    TrainingDiverged,
    attention_pool,
    train_neural,
)

__all__ = [
    "DatasetSplit",
    "split_dataset",
    "LinearModel",
    "train_linear",
    "EvalReport",
    "evaluate",
    "Trial",
    "hyperparam_search",
    "NeuralConfig",
    "NeuralModel",
    "TrainingDiverged",
    "attention_pool",
    "train_neural",
]
