"""Minimal reverse-mode automatic differentiation for 1-D convolutional networks."""
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import BatchNorm1d, Conv1d, Dense, Module
from .ops import (
    add, avg_pool1d, batch_norm1d, concat, conv1d, dense, identity, max_pool1d, mean,
    mse_loss, mul, pad_last, relu, reshape, sigmoid, sub, sum_all,
)
from .optim import Adam, AdamState, adam_step
from .tensor import Tape, Tensor, backward

__all__ = [
    "Tensor", "Tape", "backward",
    "add", "sub", "mul", "relu", "sigmoid", "identity", "sum_all", "mean", "reshape", "concat",
    "pad_last", "dense", "conv1d", "avg_pool1d", "max_pool1d", "batch_norm1d", "mse_loss",
    "Module", "Conv1d", "Dense", "BatchNorm1d",
    "Adam", "AdamState", "adam_step",
    "save_checkpoint", "load_checkpoint",
]
