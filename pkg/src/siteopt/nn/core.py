"""Reverse-mode automatic differentiation on dense float64 tensors.

A ``Tensor`` wraps a numpy array and records the operations applied to it;
calling :meth:`Tensor.backward` on a scalar result walks the recorded graph
in reverse topological order and accumulates exact gradients.  Everything is
64-bit so finite-difference checks at 1e-4 relative tolerance are stable.

Only the ops the policy/value networks need are implemented: arithmetic with
numpy-style broadcasting, (batched) matmul, ReLU, tanh, exp, log, reductions,
concatenation, indexing, and a log-softmax primitive.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False,
                 _prev: tuple["Tensor", ...] = (),
                 _backward: Callable[[], None] | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._prev = _prev
        self._backward = _backward or (lambda: None)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def _accumulate(self, grad: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward requires a scalar root")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            node._backward()

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    def __add__(self, other) -> "Tensor":
        other = self._lift(other)
        out = Tensor(self.data + other.data,
                     self.requires_grad or other.requires_grad, (self, other))

        def backward():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad, other.shape))
        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        out = Tensor(-self.data, self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(-out.grad)
        out._backward = backward
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Tensor":
        return self._lift(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self._lift(other)
        out = Tensor(self.data * other.data,
                     self.requires_grad or other.requires_grad, (self, other))

        def backward():
            if self.requires_grad:
                self._accumulate(_unbroadcast(out.grad * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(out.grad * self.data, other.shape))
        out._backward = backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = self._lift(other)
        return self * other ** -1.0

    def __pow__(self, exponent: float) -> "Tensor":
        out = Tensor(self.data ** exponent, self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * exponent * self.data ** (exponent - 1.0))
        out._backward = backward
        return out

    def __matmul__(self, other) -> "Tensor":
        other = self._lift(other)
        out = Tensor(np.matmul(self.data, other.data),
                     self.requires_grad or other.requires_grad, (self, other))

        def backward():
            g = out.grad
            if self.requires_grad:
                grad = np.matmul(g, np.swapaxes(other.data, -1, -2))
                self._accumulate(_unbroadcast(grad, self.shape))
            if other.requires_grad:
                grad = np.matmul(np.swapaxes(self.data, -1, -2), g)
                other._accumulate(_unbroadcast(grad, other.shape))
        out._backward = backward
        return out

    # -- nonlinearities ------------------------------------------------------

    def relu(self) -> "Tensor":
        out = Tensor(np.maximum(self.data, 0.0), self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * (self.data > 0))
        out._backward = backward
        return out

    def tanh(self) -> "Tensor":
        out = Tensor(np.tanh(self.data), self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * (1.0 - out.data ** 2))
        out._backward = backward
        return out

    def exp(self) -> "Tensor":
        out = Tensor(np.exp(self.data), self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad * out.data)
        out._backward = backward
        return out

    def log(self) -> "Tensor":
        out = Tensor(np.log(self.data), self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad / self.data)
        out._backward = backward
        return out

    def log_softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        out = Tensor(shifted - lse, self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                soft = np.exp(out.data)
                g = out.grad
                self._accumulate(g - soft * g.sum(axis=axis, keepdims=True))
        out._backward = backward
        return out

    # -- shape / reduction ---------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims),
                     self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                self._accumulate(np.broadcast_to(g, self.shape).copy())
        out._backward = backward
        return out

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        out = Tensor(self.data.reshape(shape), self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                self._accumulate(out.grad.reshape(self.shape))
        out._backward = backward
        return out

    def __getitem__(self, key) -> "Tensor":
        out = Tensor(self.data[key], self.requires_grad, (self,))

        def backward():
            if self.requires_grad:
                g = np.zeros_like(self.data)
                np.add.at(g, key, out.grad)
                self._accumulate(g)
        out._backward = backward
        return out


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis),
                 any(t.requires_grad for t in tensors), tuple(tensors))
    sizes = [d.shape[axis] for d in datas]

    def backward():
        splits = np.cumsum(sizes)[:-1]
        pieces = np.split(out.grad, splits, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                t._accumulate(piece)
    out._backward = backward
    return out


def stack_rows(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    out = Tensor(np.stack([t.data for t in tensors]),
                 any(t.requires_grad for t in tensors), tuple(tensors))

    def backward():
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(out.grad[i])
    out._backward = backward
    return out


class ParamStore:
    """Named trainable tensors with deterministic seeded initialization.

    Initialization is uniform in +-1/sqrt(fan_in), the scheme every layer in
    this package shares.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(np.random.PCG64(seed))
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> Tensor:
        if name in self.params:
            raise KeyError(f"parameter '{name}' already exists")
        if fan_in is None:
            fan_in = shape[-1] if len(shape) > 1 else shape[0]
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        data = self._rng.uniform(-bound, bound, size=shape)
        t = Tensor(data, requires_grad=True)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def gradients(self) -> dict[str, Array]:
        return {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in self.params.items()}

    def get_values(self) -> dict[str, Array]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def set_values(self, values: dict[str, Array]) -> None:
        for name, value in values.items():
            t = self.params[name]
            if t.data.shape != value.shape:
                raise ValueError(f"shape mismatch for '{name}': "
                                 f"{t.data.shape} vs {value.shape}")
            t.data = value.astype(np.float64).copy()
