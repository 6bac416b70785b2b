"""Dense reverse-mode automatic differentiation over numpy arrays.

Every operation on a :class:`Tensor` records its inputs and a closure that
pushes the output gradient back to them. Calling :meth:`Tensor.backward` on a
scalar walks that tape in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import UsageError

DTYPE = np.float64


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # sum out the axes numpy broadcast over in the forward pass
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple["Tensor", ...] = (), _op: str = ""):
        self.data = np.array(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = np.zeros_like(self.data) if requires_grad else None
        self._parents = _parents
        self._op = _op
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'})"

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    @property
    def _tracked(self) -> bool:
        return self.requires_grad or self._backward is not None

    def _accumulate(self, g: np.ndarray) -> None:
        if not self._tracked:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    @staticmethod
    def _make(data: np.ndarray, parents: Sequence["Tensor"], op: str,
              backward: Callable[[np.ndarray], None]) -> "Tensor":
        parents = tuple(p for p in parents if isinstance(p, Tensor))
        track = any(p._tracked for p in parents)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out._op = op
        if track:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # arithmetic

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def backward(g):
            a._accumulate(_unbroadcast(g, a.shape))
            b._accumulate(_unbroadcast(g, b.shape))

        return Tensor._make(a.data + b.data, (a, b), "add", backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        a = self
        return Tensor._make(-a.data, (a,), "neg", lambda g: a._accumulate(-g))

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def backward(g):
            a._accumulate(_unbroadcast(g * b.data, a.shape))
            b._accumulate(_unbroadcast(g * a.data, b.shape))

        return Tensor._make(a.data * b.data, (a, b), "mul", backward)

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other
        if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
            raise UsageError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

        def backward(g):
            if a._tracked:
                a._accumulate(g @ b.data.T)
            if b._tracked:
                b._accumulate(a.data.T @ g)

        return Tensor._make(a.data @ b.data, (a, b), "matmul", backward)

    def square(self) -> "Tensor":
        a = self
        return Tensor._make(a.data * a.data, (a,), "square",
                            lambda g: a._accumulate(2.0 * a.data * g))

    def relu(self) -> "Tensor":
        a = self
        mask = a.data > 0
        return Tensor._make(np.where(mask, a.data, 0.0), (a,), "relu",
                            lambda g: a._accumulate(g * mask))

    def tanh(self) -> "Tensor":
        a = self
        t = np.tanh(a.data)
        return Tensor._make(t, (a,), "tanh",
                            lambda g: a._accumulate(g * (1.0 - t * t)))

    def sum(self) -> "Tensor":
        a = self
        return Tensor._make(np.array(a.data.sum()), (a,), "sum",
                            lambda g: a._accumulate(np.broadcast_to(g, a.shape).copy()))

    def mean(self) -> "Tensor":
        a = self
        n = a.data.size
        return Tensor._make(np.array(a.data.mean()), (a,), "mean",
                            lambda g: a._accumulate(np.full(a.shape, float(g) / n)))

    def backward(self) -> None:
        if self.data.size != 1:
            raise UsageError(f"backward needs a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Join tensors along ``axis``; the gradient is split back to each input."""
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            t._accumulate(piece)

    return Tensor._make(data, tensors, "concat", backward)


def parameters_to_vector(params: Iterable[Tensor]) -> np.ndarray:
    return np.concatenate([p.data.ravel() for p in params])
