"""Minimal reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps a float64 array and, when it was produced by an
operation on tensors that require gradients, a closure that pushes the
incoming gradient back to its parents. :func:`backward` walks the graph in
reverse topological order, visiting every node once.

Only leaves (tensors created directly, e.g. parameters) keep ``.grad``
after a backward pass; intermediate gradients live in a local table.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonScalarLoss


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def T(self) -> Tensor:
        return swapaxes(self, -1, -2)

    def zero_grad(self) -> None:
        self.grad = None

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    __add__ = lambda self, other: add(self, other)  # noqa: E731
    __radd__ = lambda self, other: add(other, self)  # noqa: E731
    __sub__ = lambda self, other: sub(self, other)  # noqa: E731
    __rsub__ = lambda self, other: sub(other, self)  # noqa: E731
    __mul__ = lambda self, other: mul(self, other)  # noqa: E731
    __rmul__ = lambda self, other: mul(other, self)  # noqa: E731
    __truediv__ = lambda self, other: div(self, other)  # noqa: E731
    __neg__ = lambda self: neg(self)  # noqa: E731
    __matmul__ = lambda self, other: matmul(self, other)  # noqa: E731
    __rmatmul__ = lambda self, other: matmul(other, self)  # noqa: E731
    __getitem__ = lambda self, idx: getitem(self, idx)  # noqa: E731


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: Iterable[Tensor], backward_fn) -> Tensor:
    out = Tensor(data)
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(loss: Tensor) -> list[Tensor]:
    """Accumulate ``d loss / d leaf`` into ``leaf.grad`` for every reachable leaf.

    Returns the leaves that received a gradient, in discovery order.
    """
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return []

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
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: list[Tensor] = []
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            leaves.append(node)
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    return leaves


# elementwise arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _node(-a.data, (a,), lambda g: (-g,))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _node(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return _node(out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid(a.data)
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    """``max(0, a)``; the subgradient at 0 is taken as 0."""
    a = as_tensor(a)
    mask = a.data > 0.0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


# reductions and shape ops

def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _node(out, (a,), back)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return sum(a, axis=axis, keepdims=keepdims) * (1.0 / float(count))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = np.argsort(axes)
    return _node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def swapaxes(a, i: int, j: int) -> Tensor:
    a = as_tensor(a)
    return _node(np.swapaxes(a.data, i, j), (a,), lambda g: (np.swapaxes(g, i, j),))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul expects operands with at least two dimensions")

    def back(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return _node(a.data @ b.data, (a, b), back)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return _node(
        np.concatenate([t.data for t in tensors], axis=axis),
        tensors,
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    return _node(
        np.stack([t.data for t in tensors], axis=axis),
        tensors,
        lambda g: tuple(np.moveaxis(g, axis, 0)),
    )


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)

    def back(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _node(a.data[idx], (a,), back)


def take_along_axis(a, indices: np.ndarray, axis: int) -> Tensor:
    """``np.take_along_axis`` including its broadcasting of size-1 axes."""
    a = as_tensor(a)
    indices = np.asarray(indices)
    data = np.take_along_axis(a.data, indices, axis=axis)
    axis = axis % a.ndim

    def back(g):
        out = np.zeros_like(a.data)
        idx = list(np.indices(data.shape, sparse=True))
        for d, size in enumerate(a.shape):
            if d != axis and size == 1:
                idx[d] = np.zeros_like(idx[d])  # ``a`` was broadcast along d
        idx[axis] = np.broadcast_to(indices, data.shape)
        np.add.at(out, tuple(idx), g)
        return (out,)

    return _node(data, (a,), back)


# normalisations

def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _node(out, (a,), back)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def back(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _node(out, (a,), back)


# fused recurrent op

def lstm_sequence(x, w_x, w_h, b, reverse: bool = False) -> Tensor:
    """Run one LSTM direction over a batch of equal-length sequences.

    ``x`` has shape ``(l, B, d_in)``; ``w_x`` is ``(4H, d_in)``, ``w_h`` is
    ``(4H, H)`` and ``b`` is ``(4H,)`` with gate blocks ordered input,
    forget, output, candidate. Initial hidden and cell states are zero.
    Returns hidden states of shape ``(l, B, H)`` aligned with the input
    time axis, also when ``reverse`` is set.
    """
    x, w_x, w_h, b = as_tensor(x), as_tensor(w_x), as_tensor(w_h), as_tensor(b)
    xs = x.data[::-1] if reverse else x.data
    length, batch, d_in = xs.shape
    H = w_h.shape[1]
    xs_flat = np.ascontiguousarray(xs).reshape(-1, d_in)
    zx = (xs_flat @ w_x.data.T + b.data).reshape(length, batch, 4 * H)
    wh = w_h.data
    wh_t = np.ascontiguousarray(wh.T)
    # sigmoid(z) = (1 + tanh(z / 2)) / 2, so one tanh call serves all four gates
    half = np.full(4 * H, 0.5)
    half[3 * H :] = 1.0

    gates = np.empty((length, batch, 4 * H))
    cells = np.empty((length, batch, H))
    hidden = np.empty((length, batch, H))
    h = np.zeros((batch, H))
    c = np.zeros((batch, H))
    for t in range(length):
        act = gates[t]
        np.tanh((zx[t] + h @ wh_t) * half, out=act)
        act[:, : 3 * H] += 1.0
        act[:, : 3 * H] *= 0.5
        c = act[:, H : 2 * H] * c + act[:, :H] * act[:, 3 * H :]
        cells[t] = c
        h = act[:, 2 * H : 3 * H] * np.tanh(c)
        hidden[t] = h
    out = hidden[::-1].copy() if reverse else hidden

    def back(g):
        g = g[::-1] if reverse else g
        i, f = gates[..., :H], gates[..., H : 2 * H]
        o, gg = gates[..., 2 * H : 3 * H], gates[..., 3 * H :]
        tc = np.tanh(cells)
        c_prev = np.concatenate([np.zeros((1, batch, H)), cells[:-1]])
        dc_from_dh = o * (1.0 - tc * tc)
        # local derivatives of the pre-activations w.r.t. the cell gradient
        via_c = np.stack(
            [gg * i * (1.0 - i), c_prev * f * (1.0 - f), np.zeros_like(o), i * (1.0 - gg * gg)],
            axis=2,
        )
        via_h = tc * o * (1.0 - o)
        dz_all = np.empty((length, batch, 4, H))
        dh_next = np.zeros((batch, H))
        dc_next = np.zeros((batch, H))
        for t in range(length - 1, -1, -1):
            dh = g[t] + dh_next
            dc = dh * dc_from_dh[t] + dc_next
            dz = dz_all[t]
            np.multiply(dc[:, None, :], via_c[t], out=dz)
            np.multiply(dh, via_h[t], out=dz[:, 2])
            dc_next = dc * f[t]
            dh_next = dz.reshape(batch, 4 * H) @ wh
        flat_dz = dz_all.reshape(-1, 4 * H)
        h_prev = np.concatenate([np.zeros((1, batch, H)), hidden[:-1]]).reshape(-1, H)
        d_wx = flat_dz.T @ xs_flat
        d_wh = flat_dz.T @ h_prev
        d_b = flat_dz.sum(axis=0)
        dx = (flat_dz @ w_x.data).reshape(length, batch, d_in)
        if reverse:
            dx = dx[::-1].copy()
        return dx, d_wx, d_wh, d_b

    return _node(out, (x, w_x, w_h, b), back)
