"""Minimal dense-tensor engine: float32 tensors, tape autodiff, Adam."""
from . import ops
from .adam import AdamState, adam_step, clip_gradients
from .checkpoint import CheckpointError, load_weights, save_weights
from .init import conv_params, conv_transpose_params, dense_params, glorot, lstm_params
from .tensor import ShapeError, Tape, Tensor, backward, parameter

__all__ = [
    "ops", "AdamState", "adam_step", "clip_gradients", "CheckpointError",
    "load_weights", "save_weights", "conv_params", "conv_transpose_params",
    "dense_params", "glorot", "lstm_params", "ShapeError", "Tape", "Tensor",
    "backward", "parameter",
]
