"""Small reverse-mode autodiff over dense numpy arrays.

Every operation on a :class:`Tensor` that requires a gradient records its
parents and a backward closure.  Calling :meth:`Tensor.backward` walks the
recorded nodes once each, in reverse creation order, accumulating ``grad``.

Only what the bound search needs is here: elementwise arithmetic with numpy
broadcasting (up to 2-D), a handful of nonlinearities, matrix products,
linear solves and log-determinants.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

_ids = itertools.count()


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a linear system or determinant is numerically singular."""


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out the axes numpy broadcasting expanded
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A dense array with an optional gradient accumulator."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_id", "meta")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=float)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._parents = _parents
        self._backward = _backward
        self._id = next(_ids)
        self.meta = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    # -- graph plumbing -----------------------------------------------------

    @staticmethod
    def _make(data, parents: Sequence["Tensor"], backward: Callable[[np.ndarray], None]) -> "Tensor":
        live = tuple(p for p in parents if p.requires_grad)
        if not live:
            return Tensor(data)
        return Tensor(data, requires_grad=True, _parents=live, _backward=backward)

    def backward(self, grad=None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if not self.requires_grad:
            raise RuntimeError("tensor does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise ValueError("grad must be given for non-scalar outputs")
            grad = np.ones_like(self.data)
        nodes = {}
        stack = [self]
        while stack:
            node = stack.pop()
            if node._id in nodes:
                continue
            nodes[node._id] = node
            stack.extend(node._parents)
        order = sorted(nodes.values(), key=lambda n: n._id, reverse=True)
        for node in order:
            if node._parents:
                node.grad = np.zeros_like(node.data)
        self.grad = self.grad + grad
        for node in order:
            if node._backward is not None:
                node._backward(node.grad)

    # -- elementwise arithmetic -----------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a.grad += _unbroadcast(g, a.shape)
            if b.requires_grad:
                b.grad += _unbroadcast(g, b.shape)

        return Tensor._make(a.data + b.data, (a, b), bw)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a.grad += _unbroadcast(g, a.shape)
            if b.requires_grad:
                b.grad -= _unbroadcast(g, b.shape)

        return Tensor._make(a.data - b.data, (a, b), bw)

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a.grad += _unbroadcast(g * b.data, a.shape)
            if b.requires_grad:
                b.grad += _unbroadcast(g * a.data, b.shape)

        return Tensor._make(a.data * b.data, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            if a.requires_grad:
                a.grad += _unbroadcast(g / b.data, a.shape)
            if b.requires_grad:
                b.grad -= _unbroadcast(g * a.data / b.data**2, b.shape)

        return Tensor._make(a.data / b.data, (a, b), bw)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __pow__(self, power: float) -> "Tensor":
        if isinstance(power, Tensor):
            raise TypeError("only scalar exponents are supported")
        a = self

        def bw(g):
            a.grad += g * power * a.data ** (power - 1)

        return Tensor._make(a.data**power, (a,), bw)

    # -- matrix operations ------------------------------------------------------

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            ad, bd = a.data, b.data
            if a.requires_grad:
                if bd.ndim == 1:
                    a.grad += np.outer(g, bd) if ad.ndim == 2 else g * bd
                else:
                    a.grad += g @ bd.T
            if b.requires_grad:
                if ad.ndim == 1:
                    b.grad += np.outer(ad, g) if bd.ndim == 2 else g * ad
                else:
                    b.grad += ad.T @ g

        return Tensor._make(a.data @ b.data, (a, b), bw)

    def __rmatmul__(self, other) -> "Tensor":
        return as_tensor(other) @ self

    @property
    def T(self) -> "Tensor":
        a = self

        def bw(g):
            a.grad += g.T

        return Tensor._make(a.data.T, (a,), bw)

    def reshape(self, *shape) -> "Tensor":
        a = self

        def bw(g):
            a.grad += g.reshape(a.shape)

        return Tensor._make(a.data.reshape(*shape), (a,), bw)

    def __getitem__(self, index) -> "Tensor":
        a = self

        def bw(g):
            np.add.at(a.grad, index, g)

        return Tensor._make(a.data[index], (a,), bw)

    # -- reductions -------------------------------------------------------------

    def sum(self, axis=None) -> "Tensor":
        a = self

        def bw(g):
            if axis is None:
                a.grad += np.broadcast_to(g, a.shape)
            else:
                a.grad += np.broadcast_to(np.expand_dims(g, axis), a.shape)

        return Tensor._make(a.data.sum(axis=axis), (a,), bw)

    def mean(self, axis=None) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) * (1.0 / count)

    # -- nonlinearities -------------------------------------------------------------

    def exp(self) -> "Tensor":
        a = self
        out = np.exp(a.data)

        def bw(g):
            a.grad += g * out

        return Tensor._make(out, (a,), bw)

    def log(self) -> "Tensor":
        a = self

        def bw(g):
            a.grad += g / a.data

        return Tensor._make(np.log(a.data), (a,), bw)

    def abs(self) -> "Tensor":
        a = self

        def bw(g):
            a.grad += g * np.sign(a.data)

        return Tensor._make(np.abs(a.data), (a,), bw)

    def tanh(self) -> "Tensor":
        a = self
        out = np.tanh(a.data)

        def bw(g):
            a.grad += g * (1.0 - out**2)

        return Tensor._make(out, (a,), bw)

    def sigmoid(self) -> "Tensor":
        a = self
        out = _sigmoid(a.data)

        def bw(g):
            a.grad += g * out * (1.0 - out)

        return Tensor._make(out, (a,), bw)

    def softmax(self, axis: int = -1) -> "Tensor":
        a = self
        z = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(z)
        out = e / e.sum(axis=axis, keepdims=True)

        def bw(g):
            a.grad += out * (g - (g * out).sum(axis=axis, keepdims=True))

        return Tensor._make(out, (a,), bw)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # numerically stable for large |x|
    return np.exp(-np.logaddexp(0.0, -x))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(np.array(data, dtype=float), requires_grad=requires_grad)


def stop_gradient(x: Tensor) -> Tensor:
    """Same values, no gradient path back to ``x``."""
    return Tensor(as_tensor(x).data.copy())


def straight_through(hard, soft: Tensor) -> Tensor:
    """Forward value ``hard`` exactly; backward gradient routed to ``soft``.

    Equivalent to ``stop_gradient(hard - soft) + soft`` without the rounding
    the subtraction introduces.
    """
    soft = as_tensor(soft)
    hard = np.asarray(as_tensor(hard).data, dtype=float)
    if hard.shape != soft.shape:
        raise ValueError(f"shape mismatch {hard.shape} vs {soft.shape}")

    def bw(g):
        soft.grad += g

    return Tensor._make(hard.copy(), (soft,), bw)


def concat(parts: Sequence, axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    bounds = np.cumsum([0] + sizes)

    def bw(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            if p.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                p.grad += g[tuple(sl)]

    return Tensor._make(np.concatenate([p.data for p in parts], axis=axis), parts, bw)


def trace(a: Tensor) -> Tensor:
    a = as_tensor(a)
    n = a.shape[0]

    def bw(g):
        a.grad += g * np.eye(n)

    return Tensor._make(np.trace(a.data), (a,), bw)


def squared_error(pred: Tensor, target) -> Tensor:
    """Mean of squared residuals."""
    diff = as_tensor(pred) - as_tensor(target)
    return (diff * diff).mean()


def solve(a: Tensor, b: Tensor) -> Tensor:
    """Solve ``a @ x = b`` for square ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch in solve: {a.shape} and {b.shape}")
    try:
        x = np.linalg.solve(a.data, b.data)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc

    def bw(g):
        gb = np.linalg.solve(a.data.T, g)
        if b.requires_grad:
            b.grad += gb
        if a.requires_grad:
            a.grad -= np.outer(gb, x) if x.ndim == 1 else gb @ x.T

    return Tensor._make(x, (a, b), bw)


def logdet(a: Tensor) -> Tensor:
    """log|det a| for matrices with positive determinant (LU based)."""
    a = as_tensor(a)
    sign, value = np.linalg.slogdet(a.data)
    if sign <= 0:
        raise DomainError("determinant is not positive")

    def bw(g):
        try:
            inv = np.linalg.inv(a.data)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        a.grad += g * inv.T

    return Tensor._make(value, (a,), bw)


def op_inventory() -> frozenset:
    """Names of the primitives this layer differentiates."""
    return frozenset({
        "add", "sub", "mul", "div", "neg", "pow", "exp", "log", "abs", "tanh",
        "sigmoid", "softmax", "matmul", "transpose", "trace", "mean", "sum",
        "squared_error", "stop_gradient", "straight_through", "solve", "logdet",
        "reshape", "getitem", "concat",
    })


def grad_check(f: Callable[[Tensor], Tensor], x, step: float = 1e-5, eps: float = 1e-6) -> float:
    """Max relative error between the recorded gradient and central differences.

    The error per coordinate is ``|analytic - numeric| / (|analytic| + eps)``.
    """
    x0 = np.array(as_tensor(x).data, dtype=float)
    leaf = Tensor(x0.copy(), requires_grad=True)
    out = f(leaf)
    out.backward()
    analytic = leaf.grad
    numeric = np.zeros_like(x0)
    for idx in np.ndindex(x0.shape):
        plus = x0.copy()
        plus[idx] += step
        minus = x0.copy()
        minus[idx] -= step
        numeric[idx] = (f(Tensor(plus)).item() - f(Tensor(minus)).item()) / (2 * step)
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + eps)))
