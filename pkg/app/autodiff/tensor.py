"""
Dense float64 tensors with reverse-mode automatic differentiation.

Every operation on tensors that require gradients records a node holding its
parents and a backward closure. `Tensor.backward` walks the recorded graph in
reverse topological order and frees it afterwards. Batched operands are
supported by numpy broadcasting over leading axes; matrix-shaped operations
act on the last two axes.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import ContractError, DimensionError, EmptyInputError, NumericError

DTYPE = np.float64

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """A dense real array that can take part in reverse-mode differentiation."""

    # numpy defers to the reflected operators below instead of broadcasting over Tensors
    __array_ufunc__ = None

    def __init__(self, data: Any, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.array(data, dtype=DTYPE, order="C")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.op = "leaf"
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._graph_freed = False

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> Tensor:
        return transpose(self)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # Arithmetic
    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other: Any) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return index_select(self, index)

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def relu(self) -> Tensor:
        return relu(self)

    def sigmoid(self) -> Tensor:
        return sigmoid(self)

    def exp(self) -> Tensor:
        return exp(self)

    def log(self) -> Tensor:
        return log(self)

    def backward(self, retain_graph: bool = False) -> None:
        """
        Populate `.grad` on every gradient-requiring tensor this scalar depends on.

        Gradients accumulate into existing `.grad` buffers. The recorded graph is
        released afterwards unless `retain_graph` is set.

        Raises:
            ContractError: If the tensor is not a scalar, does not depend on any
                gradient-requiring tensor, or its graph was already released
        """
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")
        if self._graph_freed:
            raise ContractError("graph already released; call backward(retain_graph=True) to reuse it")
        if not self.requires_grad:
            raise ContractError("loss does not depend on any tensor that requires grad")

        order = _topological_order(self)
        pending = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            node.grad = np.array(grad, dtype=DTYPE) if node.grad is None else node.grad + grad
            if node._backward is None:
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

        if not retain_graph:
            for node in order:
                if node._backward is not None:
                    node._parents = ()
                    node._backward = None
                    node._graph_freed = True


class Parameter(Tensor):
    """A named trainable tensor."""

    def __init__(self, data: Any, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=DTYPE, order="C")
    out.requires_grad = False
    out.grad = None
    out.op = op
    out._parents = ()
    out._backward = None
    out._graph_freed = False
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# Elementwise binary


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward, "mul")


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g: np.ndarray):
        return (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return _result(a.data / b.data, (a, b), backward, "div")


def neg(a: Any) -> Tensor:
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


# Matrix


def matmul(a: Any, b: Any) -> Tensor:
    """
    Matrix product over the last two axes, broadcasting leading axes.

    Raises:
        DimensionError: If the inner axes (or the broadcast axes) disagree
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as e:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}") from e

    def backward(g: np.ndarray):
        return (
            unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape),
            unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape),
        )

    return _result(data, (a, b), backward, "matmul")


def transpose(a: Any) -> Tensor:
    """Swap the last two axes."""
    a = as_tensor(a)
    if a.ndim < 2:
        raise DimensionError(f"transpose needs at least 2 axes, got shape {a.shape}")
    return _result(np.swapaxes(a.data, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),), "transpose")


def reshape(a: Any, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"cannot reshape {a.shape} into {tuple(shape)}") from e
    return _result(data, (a,), lambda g: (g.reshape(a.shape),), "reshape")


# Elementwise unary


def exp(a: Any) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,), "exp")


def log(a: Any) -> Tensor:
    a = as_tensor(a)
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def relu(a: Any) -> Tensor:
    """max(0, x); the subgradient at exactly 0 is 0."""
    a = as_tensor(a)
    mask = a.data > 0
    return _result(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,), "relu")


def sigmoid(a: Any) -> Tensor:
    a = as_tensor(a)
    x = a.data
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def clip(a: Any, low: float, high: float) -> Tensor:
    """Clamp into [low, high]; gradient passes only inside the interval."""
    a = as_tensor(a)
    inside = (a.data >= low) & (a.data <= high)
    return _result(np.clip(a.data, low, high), (a,), lambda g: (g * inside,), "clip")


# Reductions


def _normalize_axes(axis: Optional[Union[int, Tuple[int, ...]]], ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(sorted(ax % ndim for ax in axes))


def sum_(a: Any, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    data = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g: np.ndarray):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(data, (a,), backward, "sum")


def mean(a: Any, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    if count == 0:
        raise EmptyInputError(f"mean over an empty axis of shape {a.shape}")
    return sum_(a, axis=axes, keepdims=keepdims) / float(count)


def l2_norm(a: Any, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Euclidean norm along `axis`; the gradient at the zero vector is 0."""
    a = as_tensor(a)
    norm = np.sqrt(np.sum(a.data * a.data, axis=axis, keepdims=True))
    safe = np.where(norm > 0, norm, 1.0)

    def backward(g: np.ndarray):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.where(norm > 0, g * a.data / safe, 0.0),)

    data = norm if keepdims else np.squeeze(norm, axis=axis)
    return _result(data, (a,), backward, "l2_norm")


def softmax_rows(a: Any) -> Tensor:
    """
    Softmax over the last axis, stabilised by subtracting each row's maximum.

    Raises:
        EmptyInputError: If the last axis is empty
        NumericError: If any entry is not finite
    """
    a = as_tensor(a)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise EmptyInputError(f"softmax needs a non-empty last axis, got shape {a.shape}")
    if not np.all(np.isfinite(a.data)):
        raise NumericError("softmax input contains non-finite values")
    shifted = np.exp(a.data - a.data.max(axis=-1, keepdims=True))
    out = shifted / shifted.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _result(out, (a,), backward, "softmax")


def log_softmax_rows(a: Any) -> Tensor:
    """log(softmax) over the last axis, composed from exp/sum/log around a constant shift."""
    a = as_tensor(a)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise EmptyInputError(f"log-softmax needs a non-empty last axis, got shape {a.shape}")
    if not np.all(np.isfinite(a.data)):
        raise NumericError("log-softmax input contains non-finite values")
    shift = Tensor(a.data.max(axis=-1, keepdims=True))
    centred = a - shift
    return centred - log(sum_(exp(centred), axis=-1, keepdims=True))


def global_average_pool(a: Any) -> Tensor:
    """
    Mean over the spatial-position axis of a [..., D, C] tensor.

    Raises:
        EmptyInputError: If D = 0
    """
    a = as_tensor(a)
    if a.ndim < 2:
        raise DimensionError(f"global average pooling needs [..., D, C], got shape {a.shape}")
    if a.shape[-2] == 0:
        raise EmptyInputError("global average pooling over zero positions")
    return mean(a, axis=-2)


# Structure


def index_select(a: Any, index: Any) -> Tensor:
    a = as_tensor(a)
    if isinstance(index, Tensor):
        index = index.data.astype(np.intp)
    data = np.array(a.data[index], dtype=DTYPE)

    def backward(g: np.ndarray):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return _result(data, (a,), backward, "index")


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise EmptyInputError("concat of an empty sequence")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"concat shape mismatch: {[t.shape for t in tensors]}") from e
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(data, tensors, backward, "concat")


def stack(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise EmptyInputError("stack of an empty sequence")
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"stack shape mismatch: {[t.shape for t in tensors]}") from e

    def backward(g: np.ndarray):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(data, tensors, backward, "stack")
