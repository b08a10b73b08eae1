from app.autodiff.tensor import (
    Parameter,
    Tensor,
    as_tensor,
    clip,
    concat,
    global_average_pool,
    l2_norm,
    log_softmax_rows,
    matmul,
    no_grad,
    relu,
    sigmoid,
    softmax_rows,
    stack,
    transpose,
)
from app.autodiff.gradcheck import grad_check, relative_errors
from app.autodiff.serialization import load_parameters, save_parameters

__all__ = [
    "Parameter",
    "Tensor",
    "as_tensor",
    "clip",
    "concat",
    "global_average_pool",
    "l2_norm",
    "log_softmax_rows",
    "matmul",
    "no_grad",
    "relu",
    "sigmoid",
    "softmax_rows",
    "stack",
    "transpose",
    "grad_check",
    "relative_errors",
    "load_parameters",
    "save_parameters",
]
