"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; calling
``backward()`` on a scalar result accumulates exact analytic gradients into
every reachable tensor created with ``requires_grad=True``. Only the small
set of operations the verification model needs is implemented: elementwise
arithmetic, matmul, relu/tanh/sigmoid/exp/log/sqrt, reductions, concat,
slicing, softmax, and a fused LSTM cell.

Graphs are built eagerly; wrap inference code in ``no_grad()`` to skip
closure allocation entirely.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import GraphError

_grad_mode: list[bool] = [True]


class no_grad:
    """Context manager disabling graph construction."""

    def __enter__(self) -> None:
        _grad_mode.append(False)

    def __exit__(self, *exc) -> None:
        _grad_mode.pop()


def grad_enabled() -> bool:
    return _grad_mode[-1]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction helpers ------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    # -- autodiff core -------------------------------------------------------

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        if seed is None:
            seed = np.ones_like(self.data)
        self.grad = np.asarray(seed, dtype=self.data.dtype)
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other, self))

    def __radd__(self, other):
        return add(_wrap(other, self), self)

    def __sub__(self, other):
        return sub(self, _wrap(other, self))

    def __rsub__(self, other):
        return sub(_wrap(other, self), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self))

    def __rmul__(self, other):
        return mul(_wrap(other, self), self)

    def __truediv__(self, other):
        return div(self, _wrap(other, self))

    def __rtruediv__(self, other):
        return div(_wrap(other, self), self)

    def __neg__(self):
        return mul(self, _wrap(-1.0, self))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _wrap(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.data.dtype))


def constant(data, dtype=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype))


def parameter(data, dtype=None) -> Tensor:
    return Tensor(np.array(data, dtype=dtype), requires_grad=True)


def _node(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    # Never mutate in place: grads may alias views of downstream buffers.
    t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- primitives ---------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise GraphError(f"add shapes {a.shape} and {b.shape}: {exc}") from None
    out = _node(data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError as exc:
        raise GraphError(f"sub shapes {a.shape} and {b.shape}: {exc}") from None
    out = _node(data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g, b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise GraphError(f"mul shapes {a.shape} and {b.shape}: {exc}") from None
    out = _node(data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data / b.data
    except ValueError as exc:
        raise GraphError(f"div shapes {a.shape} and {b.shape}: {exc}") from None
    out = _node(data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise GraphError(f"matmul shapes {a.shape} and {b.shape}")
    out = _node(a.data @ b.data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ g)

    out._backward = backward if out.requires_grad else None
    return out


def relu(a: Tensor) -> Tensor:
    out = _node(np.maximum(a.data, 0.0), (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad * (a.data > 0))

    out._backward = backward if out.requires_grad else None
    return out


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)
    out = _node(data, (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad * (1.0 - data * data))

    out._backward = backward if out.requires_grad else None
    return out


def _sigmoid_values(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a: Tensor) -> Tensor:
    data = _sigmoid_values(a.data)
    out = _node(data, (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad * data * (1.0 - data))

    out._backward = backward if out.requires_grad else None
    return out


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)
    out = _node(data, (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad * data)

    out._backward = backward if out.requires_grad else None
    return out


def log(a: Tensor) -> Tensor:
    out = _node(np.log(a.data), (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad / a.data)

    out._backward = backward if out.requires_grad else None
    return out


def sqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)
    out = _node(data, (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad / (2.0 * data))

    out._backward = backward if out.requires_grad else None
    return out


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise max with a scalar; gradient passes only where a > floor."""
    out = _node(np.maximum(a.data, floor), (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad * (a.data > floor))

    out._backward = backward if out.requires_grad else None
    return out


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), None)

    def backward():
        if not a.requires_grad:
            return
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    out._backward = backward if out.requires_grad else None
    return out


def tensor_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return tensor_sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reduce_min(a: Tensor) -> Tensor:
    """Minimum over all entries, shaped [1,1]; subgradient to the first argmin."""
    flat_idx = int(np.argmin(a.data))
    out = _node(np.array([[a.data.reshape(-1)[flat_idx]]], dtype=a.data.dtype), (a,), None)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g.reshape(-1)[flat_idx] = out.grad.reshape(-1)[0]
            _accum(a, g)

    out._backward = backward if out.requires_grad else None
    return out


def reduce_max(a: Tensor) -> Tensor:
    """Maximum over all entries, shaped [1,1]; subgradient to the first argmax."""
    flat_idx = int(np.argmax(a.data))
    out = _node(np.array([[a.data.reshape(-1)[flat_idx]]], dtype=a.data.dtype), (a,), None)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g.reshape(-1)[flat_idx] = out.grad.reshape(-1)[0]
            _accum(a, g)

    out._backward = backward if out.requires_grad else None
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise GraphError("concat of zero tensors")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise GraphError(f"concat: {exc}") from None
    out = _node(data, tuple(tensors), None)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward():
        g = out.grad
        offset = 0
        for t, size in zip(tensors, sizes):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(offset, offset + size)
                _accum(t, g[tuple(idx)])
            offset += size

    out._backward = backward if out.requires_grad else None
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = _node(a.data.reshape(shape), (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad.reshape(a.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise GraphError(f"transpose expects a matrix, got shape {a.shape}")
    out = _node(a.data.T, (a,), None)

    def backward():
        if a.requires_grad:
            _accum(a, out.grad.T)

    out._backward = backward if out.requires_grad else None
    return out


def _is_advanced(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def getitem(a: Tensor, idx) -> Tensor:
    out = _node(a.data[idx], (a,), None)
    advanced = _is_advanced(idx)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            if advanced:
                np.add.at(g, idx, out.grad)  # repeated indices accumulate
            else:
                g[idx] += out.grad
            _accum(a, g)

    out._backward = backward if out.requires_grad else None
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    # The shift is detached: softmax is invariant to it, so the gradient is exact.
    shift = Tensor(a.data.max(axis=axis, keepdims=True))
    e = exp(sub(a, shift))
    return div(e, tensor_sum(e, axis=axis, keepdims=True))


def lstm_cell(
    x: Tensor, h: Tensor, c: Tensor, w_x: Tensor, w_h: Tensor, b: Tensor
) -> tuple[Tensor, Tensor]:
    """One LSTM step.

    x: [1, in], h/c: [1, H]; w_x: [in, 4H], w_h: [H, 4H], b: [1, 4H] holding
    the input/forget/output gates then the cell candidate, in that order.
    The whole step is one graph node with a fused analytic backward; the two
    outputs are slices of it, so gradients from both the hidden and the cell
    path accumulate before the fused backward runs.
    """
    hidden = h.data.shape[1]
    if w_x.data.shape[1] != 4 * hidden or w_h.data.shape != (hidden, 4 * hidden):
        raise GraphError(
            f"lstm_cell weight shapes {w_x.shape}/{w_h.shape} for hidden {hidden}"
        )
    if x.data.shape[0] != 1 or x.data.shape[1] != w_x.data.shape[0]:
        raise GraphError(f"lstm_cell input shape {x.shape} for w_x {w_x.shape}")
    gates = x.data @ w_x.data + h.data @ w_h.data + b.data
    sig = _sigmoid_values(gates[:, 0 : 3 * hidden])
    i = sig[:, 0:hidden]
    f = sig[:, hidden : 2 * hidden]
    o = sig[:, 2 * hidden : 3 * hidden]
    g = np.tanh(gates[:, 3 * hidden : 4 * hidden])
    c_next = f * c.data + i * g
    tanh_c = np.tanh(c_next)
    h_next = o * tanh_c
    cell = _node(np.concatenate([h_next, c_next], axis=1), (x, h, c, w_x, w_h, b), None)

    def backward():
        grad = cell.grad
        dh = grad[:, 0:hidden]
        dc_in = grad[:, hidden : 2 * hidden]
        dc = dc_in + dh * o * (1.0 - tanh_c * tanh_c)
        d_gates = np.concatenate(
            [
                (dc * g) * i * (1.0 - i),
                (dc * c.data) * f * (1.0 - f),
                (dh * tanh_c) * o * (1.0 - o),
                (dc * i) * (1.0 - g * g),
            ],
            axis=1,
        )
        if x.requires_grad:
            _accum(x, d_gates @ w_x.data.T)
        if h.requires_grad:
            _accum(h, d_gates @ w_h.data.T)
        if c.requires_grad:
            _accum(c, dc * f)
        if w_x.requires_grad:
            _accum(w_x, x.data.T @ d_gates)
        if w_h.requires_grad:
            _accum(w_h, h.data.T @ d_gates)
        if b.requires_grad:
            _accum(b, d_gates.copy())

    cell._backward = backward if cell.requires_grad else None
    return cell[:, 0:hidden], cell[:, hidden : 2 * hidden]
