from .tensor import Tape, Tensor, as_tensor
from .ops import (
    add,
    avg_pool2d,
    clip,
    global_avg_pool,
    hard_gate_blend,
    linear,
    log,
    max_pool2d,
    mean,
    mul,
    pad_channels,
    relu,
    reshape,
    scalar_add,
    scalar_mul,
    sigmoid,
    soft_gate_blend,
    tanh,
    tsum,
)
from .conv import conv2d, conv2d_naive
from .nn import BNState, batch_norm2d, lstm_cell, softmax_cross_entropy
from .optim import ParameterSet, sgd_step
from .gradcheck import grad_check

__all__ = [
    "Tape",
    "Tensor",
    "as_tensor",
    "add",
    "avg_pool2d",
    "clip",
    "global_avg_pool",
    "hard_gate_blend",
    "linear",
    "log",
    "max_pool2d",
    "mean",
    "mul",
    "pad_channels",
    "relu",
    "reshape",
    "scalar_add",
    "scalar_mul",
    "sigmoid",
    "soft_gate_blend",
    "tanh",
    "tsum",
    "conv2d",
    "conv2d_naive",
    "BNState",
    "batch_norm2d",
    "lstm_cell",
    "softmax_cross_entropy",
    "ParameterSet",
    "sgd_step",
    "grad_check",
]
