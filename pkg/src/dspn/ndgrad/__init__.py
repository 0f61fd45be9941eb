"""Minimal dense-tensor library with tape-based reverse-mode autodiff."""

from .backend import available_backends, backend_name, set_backend, use_backend
from .core import (
    DomainError,
    Parameter,
    ShapeError,
    Tape,
    Tensor,
    add,
    affine3,
    backward,
    clamp,
    concat_cols,
    concat_rows,
    ew,
    exp,
    gather_rows,
    log,
    matmul,
    matmul_t,
    mean_all,
    mean_rows,
    mul,
    one_minus,
    reduce,
    reshape,
    scale,
    scale_rows,
    sigmoid,
    slice_row,
    softmax_rows,
    sub,
    sum_all,
    sum_rows,
    tanh,
    tensor,
    transpose,
)
from .gradcheck import grad_check

__all__ = [
    "DomainError",
    "Parameter",
    "ShapeError",
    "Tape",
    "Tensor",
    "add",
    "affine3",
    "available_backends",
    "backend_name",
    "backward",
    "clamp",
    "concat_cols",
    "concat_rows",
    "ew",
    "exp",
    "gather_rows",
    "grad_check",
    "log",
    "matmul",
    "matmul_t",
    "mean_all",
    "mean_rows",
    "mul",
    "one_minus",
    "reduce",
    "reshape",
    "scale",
    "scale_rows",
    "set_backend",
    "sigmoid",
    "slice_row",
    "softmax_rows",
    "sub",
    "sum_all",
    "sum_rows",
    "tanh",
    "tensor",
    "transpose",
    "use_backend",
]
