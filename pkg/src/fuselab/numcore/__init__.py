"""Minimal dense tensor library with reverse-mode autodiff."""

from .gradcheck import CheckReport, grad_check, grad_check_params
from .ops import (
    LOG_EPS,
    add,
    clamp,
    concat,
    conv2d,
    div,
    linear,
    matmul,
    maxpool2d,
    mul,
    neg,
    relu,
    reshape,
    row_scale,
    sigmoid,
    softmax,
    squared_norm,
    sub,
    take_rows,
    tanh,
    texp,
    tlog,
    tmean,
    transpose,
    tslice,
    tsum,
)
from .tensor import Tensor, as_tensor, clip_grad_norm, global_grad_norm, zero_grads

__all__ = [
    "CheckReport",
    "LOG_EPS",
    "Tensor",
    "add",
    "as_tensor",
    "clamp",
    "clip_grad_norm",
    "concat",
    "conv2d",
    "div",
    "global_grad_norm",
    "grad_check",
    "grad_check_params",
    "linear",
    "matmul",
    "maxpool2d",
    "mul",
    "neg",
    "relu",
    "reshape",
    "row_scale",
    "sigmoid",
    "softmax",
    "squared_norm",
    "sub",
    "take_rows",
    "tanh",
    "texp",
    "tlog",
    "tmean",
    "transpose",
    "tslice",
    "tsum",
    "zero_grads",
]
