"""Minimal reverse-mode autodiff over dense float64 arrays, plus the
optimizer, layers, gradient checker, and checkpoint format used by every
trainable component in the benchmark."""

from .tensor import (
    Tensor,
    ShapeError,
    tensor,
    constant,
    add,
    sub,
    mul,
    neg,
    affine,
    matmul,
    reduce_sum,
    reduce_mean,
    relu,
    tanh,
    sigmoid,
    square,
    absolute,
    sqrt,
    softmax,
    concat,
    reshape,
    narrow,
    transpose2d,
    gather_rows,
    layer_norm,
    dropout,
    conv2d,
    upsample_bilinear,
    spatial_softmax,
    lstm_cell,
    linear,
    squared_error,
    absolute_error,
    backward,
    forward_backward,
    zero_grads,
)
from .optim import RmsPropState, rmsprop_step, clip_gradients, current_lr
from .gradcheck import finite_difference_check
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Tensor",
    "ShapeError",
    "tensor",
    "constant",
    "add",
    "sub",
    "mul",
    "neg",
    "affine",
    "matmul",
    "reduce_sum",
    "reduce_mean",
    "relu",
    "tanh",
    "sigmoid",
    "square",
    "absolute",
    "sqrt",
    "softmax",
    "concat",
    "reshape",
    "narrow",
    "transpose2d",
    "gather_rows",
    "layer_norm",
    "dropout",
    "conv2d",
    "upsample_bilinear",
    "spatial_softmax",
    "lstm_cell",
    "linear",
    "squared_error",
    "absolute_error",
    "backward",
    "forward_backward",
    "zero_grads",
    "RmsPropState",
    "rmsprop_step",
    "clip_gradients",
    "current_lr",
    "finite_difference_check",
    "save_checkpoint",
    "load_checkpoint",
]
