"""A small float64 tensor type with reverse-mode differentiation.

Only the operations the GNN needs are provided.  Each op records its inputs
and a closure that pushes the output gradient back to them; ``backward``
walks the recorded graph in reverse topological order.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy import sparse


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 _parents: Sequence["Tensor"] = (), _backward: Callable | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = tuple(_parents)
        self._backward = _backward
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}{', grad' if self.requires_grad else ''})"

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def _accum(self, g: np.ndarray) -> None:
        # never in place: the same array may be handed to several parents
        self.grad = g if self.grad is None else self.grad + g

    def backward(self, grad: np.ndarray | float | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accum(np.broadcast_to(np.asarray(grad, dtype=np.float64), self.shape))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, _parents=parents if req else (),
                  _backward=backward if req else None)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.shape))
    return _make(a.data + b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    def bw(g):
        a._accum(-g)
    return _make(-a.data, (a,), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.shape))
    return _make(a.data * b.data, (a, b), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)
    return _make(a.data @ b.data, (a, b), bw)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        a._accum(g * mask)
    return _make(a.data * mask, (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def bw(g):
        a._accum(g * out * (1.0 - out))
    return _make(out, (a,), bw)


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for p, gp in zip(parts, np.split(g, splits, axis=axis)):
            if p.requires_grad:
                p._accum(gp)
    return _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), bw)


def spmm(S: sparse.csr_matrix, a: Tensor, S_t: sparse.csr_matrix | None = None) -> Tensor:
    """``S @ a`` for a constant sparse matrix ``S``; pass ``S_t = S.T`` (CSR) to reuse it."""
    def bw(g):
        St = S_t if S_t is not None else S.T.tocsr()
        a._accum(np.asarray(St @ g))
    return _make(np.asarray(S @ a.data), (a,), bw)


def segment_matrix(segment: np.ndarray, num_segments: int, weights: np.ndarray | None = None) -> sparse.csr_matrix:
    """Sparse matrix whose product with ``x`` sums rows of ``x`` by segment id."""
    segment = np.asarray(segment, dtype=np.int64)
    w = np.ones(segment.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    return sparse.csr_matrix((w, (segment, np.arange(segment.shape[0]))),
                             shape=(num_segments, segment.shape[0]))


def segment_sum(a: Tensor, segment: np.ndarray, num_segments: int) -> Tensor:
    """Row ``s`` of the result is the sum of the rows ``a[i]`` with ``segment[i] == s``."""
    return spmm(segment_matrix(segment, num_segments), a)


def broadcast_rows(a: Tensor, rows: int) -> Tensor:
    """Repeat a vector of shape (d,) into (rows, d)."""
    def bw(g):
        a._accum(g.sum(axis=0))
    return _make(np.broadcast_to(a.data, (rows,) + a.shape).copy(), (a,), bw)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def bw(g):
        a._accum(g.reshape(a.shape))
    return _make(a.data.reshape(shape), (a,), bw)


def mean(a: Tensor) -> Tensor:
    size = a.data.size

    def bw(g):
        a._accum(np.broadcast_to(g / size, a.shape))
    return _make(a.data.mean(), (a,), bw)


LOG_CLAMP = 1e-12


def bce(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean binary cross-entropy with the prediction clamped to [1e-12, 1 - 1e-12]."""
    y = np.asarray(target, dtype=np.float64)
    p = np.clip(pred.data, LOG_CLAMP, 1.0 - LOG_CLAMP)
    inside = (pred.data >= LOG_CLAMP) & (pred.data <= 1.0 - LOG_CLAMP)
    val = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def bw(g):
        d = (-(y / p) + (1.0 - y) / (1.0 - p)) / p.size
        pred._accum(g * d * inside)
    return _make(val, (pred,), bw)


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    y = np.asarray(target, dtype=np.float64)
    diff = pred.data - y

    def bw(g):
        pred._accum(g * 2.0 * diff / diff.size)
    return _make(np.mean(diff**2), (pred,), bw)
