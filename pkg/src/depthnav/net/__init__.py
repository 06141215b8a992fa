"""Conditional imitation network: model, analytic gradients, Adam training."""

from .model import (
    ConvSpec,
    EncoderSpec,
    LossParams,
    NetworkSpec,
    backward,
    batch_loss,
    bundle_to_arrays,
    forward,
    init_params,
    loss,
    predict,
)
from .train import AdamState, TrainConfig, TrainingSet, adam_step, train
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "ConvSpec",
    "EncoderSpec",
    "NetworkSpec",
    "LossParams",
    "TrainConfig",
    "TrainingSet",
    "AdamState",
    "forward",
    "backward",
    "loss",
    "batch_loss",
    "predict",
    "init_params",
    "bundle_to_arrays",
    "adam_step",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
]
