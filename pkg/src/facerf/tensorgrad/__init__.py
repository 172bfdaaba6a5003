from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    clip,
    concat,
    conv2d,
    cos,
    cumsum,
    div,
    exp,
    getitem,
    leaky_relu,
    log,
    matmul,
    mul,
    neg,
    param,
    power,
    relu,
    reshape,
    sigmoid,
    sin,
    softplus,
    sqrt,
    stack,
    sub,
    tmean,
    transpose,
    tsum,
    upsample2,
)
from .adam import Adam, AdamState, adam_step
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "clip",
    "concat",
    "conv2d",
    "cos",
    "cumsum",
    "div",
    "exp",
    "getitem",
    "grad_check",
    "leaky_relu",
    "load_checkpoint",
    "log",
    "matmul",
    "mul",
    "neg",
    "param",
    "power",
    "relu",
    "reshape",
    "save_checkpoint",
    "sigmoid",
    "sin",
    "softplus",
    "sqrt",
    "stack",
    "sub",
    "tmean",
    "transpose",
    "tsum",
    "upsample2",
]
