"""Minimal reverse-mode differentiation over float64 numpy matrices.

Only the operations the GraphSAGE models need are provided. Every op returns
a :class:`Tensor` that remembers its parents and a closure mapping the
output gradient to parent gradients; :func:`backward` walks the tape in
reverse topological order.
"""
from __future__ import annotations

import numpy as np

from .. import kernels


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def param(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def const(value) -> Tensor:
    return Tensor(value)


class SparseOp:
    """Fixed CSR matrix used as a linear operator on dense features."""

    def __init__(self, indptr, indices, data, shape):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.shape = (int(shape[0]), int(shape[1]))
        self._t = None

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.shape[1]:
            raise ValueError(f"operator {self.shape} cannot act on {x.shape}")
        return kernels.csr_spmm(self.indptr, self.indices, self.data, x)

    @property
    def T(self) -> "SparseOp":
        if self._t is None:
            rows = np.repeat(np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr))
            order = np.lexsort((rows, self.indices))
            counts = np.bincount(self.indices, minlength=self.shape[1])
            indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
            self._t = SparseOp(indptr, rows[order], self.data[order], self.shape[::-1])
            self._t._t = self
        return self._t

    def todense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        np.add.at(out, (rows, self.indices), self.data)
        return out


def mean_operator(rows, cols, n_rows: int, n_cols: int) -> SparseOp:
    """Row-normalised operator: output row i is the mean of the input rows
    listed against i (with multiplicity). Rows with no entries give zeros."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    counts = np.bincount(rows, minlength=n_rows)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    data = 1.0 / counts[rows] if len(rows) else np.zeros(0)
    return SparseOp(indptr, cols, data, (n_rows, n_cols))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def back(g):
        return (g @ b.value.T if a.requires_grad else None,
                a.value.T @ g if b.requires_grad else None)
    return Tensor(a.value @ b.value, (a, b), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(a.value + b.value, (a, b), lambda g: (g, g))


def add_bias(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(a.value + b.value[None, :], (a, b), lambda g: (g, g.sum(axis=0)))


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return Tensor(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def concat(a: Tensor, b: Tensor) -> Tensor:
    k = a.value.shape[1]
    return Tensor(np.hstack([a.value, b.value]), (a, b), lambda g: (g[:, :k], g[:, k:]))


def take_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    n = a.value.shape[0]

    def back(g):
        out = np.zeros((n, g.shape[1]))
        np.add.at(out, idx, g)
        return (out,)
    return Tensor(a.value[idx], (a,), back)


def spmm(op: SparseOp, a: Tensor) -> Tensor:
    return Tensor(op @ a.value, (a,), lambda g: (op.T @ g,))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def weighted_cross_entropy(logits: Tensor, labels: np.ndarray, class_weight) -> Tensor:
    """Mean cross-entropy with per-class weights, normalised by the total
    weight of the targets."""
    labels = np.asarray(labels, dtype=np.int64)
    w = np.asarray(class_weight, dtype=np.float64)[labels]
    total = w.sum()
    z = logits.value - logits.value.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(len(labels))
    nll = logsum - z[rows, labels]
    loss = float((w * nll).sum() / total)

    def back(g):
        p = softmax(logits.value)
        p[rows, labels] -= 1.0
        return (g * p * (w / total)[:, None],)
    return Tensor(np.array(loss), (logits,), back)


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(t) into ``t.grad`` for every tensor on the tape
    that requires a gradient. ``root`` must be a scalar."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        t, done = stack.pop()
        if done:
            order.append(t)
            continue
        if id(t) in seen or not t.requires_grad:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for p in t.parents:
            stack.append((p, False))
    for t in order:
        t.grad = None
    root.grad = np.ones_like(root.value)
    for t in reversed(order):
        if t.backward_fn is None or t.grad is None:
            continue
        for p, g in zip(t.parents, t.backward_fn(t.grad)):
            if g is None or not p.requires_grad:
                continue
            p.grad = g if p.grad is None else p.grad + g
