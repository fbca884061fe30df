"""Layers, parameter initialisation, Adam with parameter groups and the
checkpoint file format.

Activations use the column-sample convention: a batch of ``n`` vectors of
size ``d`` is a ``d x n`` matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionMismatch, EmptySequence, LabelOutOfRange, MalformedFile

HIDDEN_SIZE = 64
CKPT_MAGIC = "gzsl-ckpt-v1"


def uniform_param(rng: np.random.Generator, shape, fan_in: int, name: str) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def zeros_param(shape, name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class Linear:
    weight: Tensor  # d_out x d_in
    bias: Tensor  # d_out

    @classmethod
    def create(cls, rng: np.random.Generator, d_in: int, d_out: int, name: str) -> Linear:
        return cls(
            uniform_param(rng, (d_out, d_in), d_in, f"{name}.weight"),
            uniform_param(rng, (d_out,), d_in, f"{name}.bias"),
        )

    def __call__(self, x: Tensor) -> Tensor:
        return fc_forward(x, self.weight, self.bias)

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


def fc_forward(x, w, b) -> Tensor:
    """``w @ x + b`` with ``b`` broadcast over the columns of ``x``."""
    x, w, b = ad.as_tensor(x), ad.as_tensor(w), ad.as_tensor(b)
    if x.ndim != 2 or w.ndim != 2 or w.shape[1] != x.shape[0] or b.shape != (w.shape[0],):
        raise DimensionMismatch(f"fc shapes x={x.shape}, w={w.shape}, b={b.shape}")
    return ad.matmul(w, x) + ad.reshape(b, (-1, 1))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under column-wise softmax."""
    logits = ad.as_tensor(logits)
    labels = np.asarray(labels, dtype=np.intp)
    n_classes, n = logits.shape
    if labels.shape != (n,):
        raise DimensionMismatch(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    picked = ad.take_along_axis(ad.log_softmax(logits, axis=0), labels[None, :], axis=0)
    return -ad.mean(picked)


@dataclass
class LstmCellParams:
    """Gate blocks are stacked in the order input, forget, output, candidate."""

    w_x: Tensor  # 4H x d_in
    w_h: Tensor  # 4H x H
    b: Tensor  # 4H

    @classmethod
    def create(
        cls, rng: np.random.Generator, d_in: int, hidden: int = HIDDEN_SIZE, name: str = "lstm"
    ) -> LstmCellParams:
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0
        return cls(
            uniform_param(rng, (4 * hidden, d_in), d_in, f"{name}.w_x"),
            uniform_param(rng, (4 * hidden, hidden), hidden, f"{name}.w_h"),
            Tensor(bias, requires_grad=True, name=f"{name}.b"),
        )

    @property
    def hidden(self) -> int:
        return self.w_h.shape[1]

    def parameters(self) -> list[Tensor]:
        return [self.w_x, self.w_h, self.b]


BlstmStack = Sequence[tuple[LstmCellParams, LstmCellParams]]


def create_blstm(
    rng: np.random.Generator, d_in: int, layers: int = 3, hidden: int = HIDDEN_SIZE, name="blstm"
) -> list[tuple[LstmCellParams, LstmCellParams]]:
    stack = []
    for k in range(layers):
        width = d_in if k == 0 else 2 * hidden
        stack.append(
            (
                LstmCellParams.create(rng, width, hidden, f"{name}.{k}.fwd"),
                LstmCellParams.create(rng, width, hidden, f"{name}.{k}.bwd"),
            )
        )
    return stack


def blstm_sequences(x: Tensor, stack: BlstmStack) -> Tensor:
    """Batched form of :func:`blstm_forward`: ``(l, B, d_in) -> (l, B, 2H)``."""
    if x.shape[0] == 0:
        raise EmptySequence("sequence has no frames")
    out = x
    for fwd, bwd in stack:
        out = ad.concat(
            [
                ad.lstm_sequence(out, fwd.w_x, fwd.w_h, fwd.b),
                ad.lstm_sequence(out, bwd.w_x, bwd.w_h, bwd.b, reverse=True),
            ],
            axis=-1,
        )
    return out


def blstm_forward(x, stack: BlstmStack) -> Tensor:
    """Top-layer hidden states for one sequence ``x`` of shape ``l x d_in``.

    Returns a ``2H x l`` matrix whose column ``t`` concatenates the forward
    and backward hidden states at time ``t``.
    """
    x = ad.as_tensor(x)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptySequence(f"expected a non-empty l x d_in sequence, got {x.shape}")
    out = blstm_sequences(ad.reshape(x, (x.shape[0], 1, x.shape[1])), stack)
    return ad.transpose(ad.reshape(out, (out.shape[0], out.shape[2])))


@dataclass
class ParamGroup:
    name: str
    params: list[Tensor]
    learning_rate: float
    step_count: int = 0


@dataclass
class Adam:
    """Adam over independent parameter groups, each with its own step count."""

    groups: list[ParamGroup]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _moments: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen: set[int] = set()
        for group in self.groups:
            for p in group.params:
                if id(p) in seen:
                    raise ValueError(f"parameter {p.name} belongs to more than one group")
                seen.add(id(p))

    def zero_grad(self) -> None:
        for group in self.groups:
            for p in group.params:
                p.grad = None

    def step(self) -> None:
        for group in self.groups:
            group.step_count += 1
            t = group.step_count
            correction1 = 1.0 - self.beta1**t
            correction2 = 1.0 - self.beta2**t
            for p in group.params:
                if p.grad is None:
                    continue
                m, v = self._moments.get(id(p), (None, None))
                if m is None:
                    m, v = np.zeros_like(p.data), np.zeros_like(p.data)
                m *= self.beta1
                m += (1.0 - self.beta1) * p.grad
                v *= self.beta2
                v += (1.0 - self.beta2) * p.grad * p.grad
                self._moments[id(p)] = (m, v)
                if group.learning_rate == 0.0:
                    continue
                p.data -= group.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


# checkpoints

def _fmt(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in values.ravel())


def save_checkpoint(path, params: Mapping[str, np.ndarray], meta: Mapping | None = None) -> None:
    """Write parameters as canonical text.

    Layout::

        gzsl-ckpt-v1
        meta <one-line JSON>
        param <name> <ndim> <dim_1> ... <dim_ndim>
        <row-major values, 17 significant digits, space separated>
        ...
        end
    """
    lines = [CKPT_MAGIC, "meta " + json.dumps(meta or {}, sort_keys=True)]
    for name in sorted(params):
        value = np.asarray(params[name], dtype=np.float64)
        if any(c.isspace() for c in name):
            raise ValueError(f"parameter name {name!r} contains whitespace")
        lines.append(" ".join(["param", name, str(value.ndim), *map(str, value.shape)]))
        lines.append(_fmt(value))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedFile(path, 0, f"cannot read checkpoint: {exc}") from exc
    if not lines or lines[0] != CKPT_MAGIC:
        raise MalformedFile(path, 1, f"missing {CKPT_MAGIC!r} header")
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise MalformedFile(path, 2, "missing meta line")
    try:
        meta = json.loads(lines[1][5:])
    except json.JSONDecodeError as exc:
        raise MalformedFile(path, 2, f"bad meta JSON: {exc}") from exc
    params: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines) and lines[i] != "end":
        head = lines[i].split()
        try:
            if head[0] != "param":
                raise ValueError("expected 'param'")
            ndim = int(head[2])
            shape = tuple(int(s) for s in head[3 : 3 + ndim])
            if len(shape) != ndim:
                raise ValueError("shape does not match ndim")
            body = lines[i + 1]
            values = np.array([float(v) for v in body.split()], dtype=np.float64)
            params[head[1]] = values.reshape(shape)
        except (IndexError, ValueError) as exc:
            raise MalformedFile(path, i + 1, f"bad parameter record: {exc}") from exc
        i += 2
    if i >= len(lines):
        raise MalformedFile(path, i, "missing 'end' marker")
    return params, meta
