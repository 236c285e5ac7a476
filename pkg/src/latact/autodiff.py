"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Define-by-run: every operation records its parents and a local backward rule
on the produced node, and ``backward`` walks the graph in reverse topological
order. The primitive set is intentionally small — affine maps, tanh,
elementwise add/mul, square, sum/mean, exp, log — which is everything the
latent-action models need. Values are float64 throughout.
"""

from __future__ import annotations

import numpy as np

Array = np.ndarray


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A graph node: a float64 array plus backward bookkeeping."""

    __slots__ = ("value", "grad", "parents", "_bwd")

    def __init__(self, value, parents=(), bwd=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Array | None = None
        self.parents: tuple[Tensor, ...] = parents
        self._bwd = bwd  # maps this node's grad to a tuple of parent grads

    @property
    def shape(self):
        return self.value.shape

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value + b.value, (a, b))
    out._bwd = lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape))
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value * b.value, (a, b))
    out._bwd = lambda g: (
        _unbroadcast(g * b.value, a.value.shape),
        _unbroadcast(g * a.value, b.value.shape),
    )
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.value @ b.value, (a, b))
    out._bwd = lambda g: (g @ b.value.T, a.value.T @ g)
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.value)
    out = Tensor(t, (a,))
    out._bwd = lambda g: (g * (1.0 - t * t),)
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.value)
    out = Tensor(e, (a,))
    out._bwd = lambda g: (g * e,)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.value), (a,))
    out._bwd = lambda g: (g / a.value,)
    return out


def square(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.value * a.value, (a,))
    out._bwd = lambda g: (g * 2.0 * a.value,)
    return out


def tsum(a, axis=None) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.value.sum(axis=axis), (a,))

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, a.value.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.value.shape).copy(),)

    out._bwd = bwd
    return out


def tmean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / count)


def slice_last(a, start: int, stop: int) -> Tensor:
    """Slice [start:stop] along the last axis."""
    a = as_tensor(a)
    out = Tensor(a.value[..., start:stop], (a,))

    def bwd(g):
        full = np.zeros_like(a.value)
        full[..., start:stop] = g
        return (full,)

    out._bwd = bwd
    return out


def concat(parts: list[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.value for p in parts], axis=axis), tuple(parts))
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]
    out._bwd = lambda g: tuple(np.split(g, splits, axis=axis))
    return out


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable node."""
    if loss.value.size != 1:
        raise ValueError("backward expects a scalar loss node")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._bwd is None or node.grad is None:
            continue
        for parent, g in zip(node.parents, node._bwd(node.grad)):
            if parent.grad is None:
                parent.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g)
            else:
                parent.grad = parent.grad + g
