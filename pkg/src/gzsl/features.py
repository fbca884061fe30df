"""Shared feature extractor and per-branch attention.

A skeleton sequence enters as a ``d_x x l`` matrix (frames as columns),
passes through multi-head self-attention with output shape equal to input
shape, then through a three-layer bidirectional LSTM. The sequence is
summarised by the last forward and first backward hidden state of the top
layer, giving a ``d_f = 128`` feature vector.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionMismatch, EmptySequence
from .nn import HIDDEN_SIZE, create_blstm, blstm_sequences, uniform_param

N_HEADS = 5
FEATURE_DIM = 2 * HIDDEN_SIZE

Pooling = Literal["last", "mean"]


@dataclass
class SelfAttentionParams:
    w_q: Tensor  # h x d_x x d_x
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor  # d_x x (h * d_x)

    @classmethod
    def create(cls, rng: np.random.Generator, d_x: int, heads: int = N_HEADS, name="attn"):
        shape = (heads, d_x, d_x)
        return cls(
            uniform_param(rng, shape, d_x, f"{name}.w_q"),
            uniform_param(rng, shape, d_x, f"{name}.w_k"),
            uniform_param(rng, shape, d_x, f"{name}.w_v"),
            uniform_param(rng, (d_x, heads * d_x), heads * d_x, f"{name}.w_o"),
        )

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    def parameters(self) -> list[Tensor]:
        return [self.w_q, self.w_k, self.w_v, self.w_o]


@dataclass
class BranchAttentionParams:
    w_at: Tensor  # d_f x d_f
    b_at: Tensor  # d_f

    @classmethod
    def create(cls, rng: np.random.Generator, d_f: int = FEATURE_DIM, name="branch_attn"):
        return cls(
            uniform_param(rng, (d_f, d_f), d_f, f"{name}.w_at"),
            uniform_param(rng, (d_f,), d_f, f"{name}.b_at"),
        )

    def parameters(self) -> list[Tensor]:
        return [self.w_at, self.b_at]


def scaled_dot_attention(q, k, v) -> Tensor:
    """``softmax(q^T k / sqrt(d_k)) v^T`` with the softmax taken per query row.

    ``q`` and ``k`` are ``d_k x n``, ``v`` is ``d_v x n``; leading batch
    axes are allowed. The result is ``n x d_v``.
    """
    q, k, v = ad.as_tensor(q), ad.as_tensor(k), ad.as_tensor(v)
    if q.shape != k.shape or q.shape[-1] != v.shape[-1]:
        raise DimensionMismatch(f"attention shapes q={q.shape}, k={k.shape}, v={v.shape}")
    scores = ad.matmul(ad.swapaxes(q, -1, -2), k) * (1.0 / np.sqrt(q.shape[-2]))
    return ad.matmul(ad.softmax(scores, axis=-1), ad.swapaxes(v, -1, -2))


def multi_head_self_attention(x, p: SelfAttentionParams) -> Tensor:
    """Self-attention with ``Q = K = V = x`` for ``x`` of shape ``d_x x l``
    (or ``B x d_x x l``). Heads are stacked row-wise after transposition and
    projected back to ``d_x`` by ``w_o``."""
    x = ad.as_tensor(x)
    if x.shape[-1] == 0:
        raise EmptySequence("sequence has no frames")
    d_x, length = x.shape[-2], x.shape[-1]
    lead = x.shape[:-2]
    xe = ad.reshape(x, lead + (1, d_x, length))
    heads = scaled_dot_attention(
        ad.matmul(p.w_q, xe), ad.matmul(p.w_k, xe), ad.matmul(p.w_v, xe)
    )  # ... x h x l x d_x
    stacked = ad.reshape(ad.swapaxes(heads, -1, -2), lead + (p.heads * d_x, length))
    return ad.matmul(p.w_o, stacked)


def branch_attention(f, p: BranchAttentionParams) -> Tensor:
    """Reweight feature components by ``softmax(w_at f + b_at)``.

    The softmax runs over the ``d_f`` components of each sample, so the
    weights of every column sum to one and the output keeps the shape of
    ``f`` (a ``d_f`` vector or a ``d_f x N`` matrix).
    """
    f = ad.as_tensor(f)
    d_f = p.w_at.shape[0]
    if f.shape[0] != d_f or f.ndim not in (1, 2):
        raise DimensionMismatch(f"expected {d_f} x N features, got {f.shape}")
    cols = ad.reshape(f, (d_f, -1)) if f.ndim == 1 else f
    weights = ad.softmax(ad.matmul(p.w_at, cols) + ad.reshape(p.b_at, (-1, 1)), axis=0)
    out = weights * cols
    return ad.reshape(out, f.shape) if f.ndim == 1 else out


def pool(hidden: Tensor, mode: Pooling = "last") -> Tensor:
    """``(l, B, 2H)`` top-layer states to ``(B, 2H)`` sequence summaries."""
    if mode == "mean":
        return ad.mean(hidden, axis=0)
    if mode != "last":
        raise ValueError(f"unknown pooling {mode!r}")
    H = hidden.shape[-1] // 2
    length = hidden.shape[0]
    return ad.concat([hidden[length - 1, :, :H], hidden[0, :, H:]], axis=-1)


@dataclass
class FeatureExtractor:
    attention: SelfAttentionParams
    blstm: list
    pooling: Pooling = "last"

    @classmethod
    def create(cls, rng: np.random.Generator, d_x: int, pooling: Pooling = "last", heads=N_HEADS):
        return cls(
            SelfAttentionParams.create(rng, d_x, heads, name="shared.attn"),
            create_blstm(rng, d_x, name="shared.blstm"),
            pooling,
        )

    @property
    def input_dim(self) -> int:
        return self.attention.w_q.shape[-1]

    def parameters(self) -> list[Tensor]:
        params = list(self.attention.parameters())
        for fwd, bwd in self.blstm:
            params += fwd.parameters() + bwd.parameters()
        return params

    def _group(self, frames: np.ndarray) -> Tensor:
        # frames: B x l x d_x
        x = Tensor(np.swapaxes(frames, 1, 2))  # B x d_x x l
        x_at = multi_head_self_attention(x, self.attention)
        hidden = blstm_sequences(ad.transpose(x_at, (2, 0, 1)), self.blstm)
        return pool(hidden, self.pooling)  # B x d_f

    def __call__(self, sequences: Sequence[np.ndarray]) -> Tensor:
        """Features ``d_f x N`` for ``N`` sequences, each an ``l_i x d_x`` array.

        Sequences of equal length are evaluated together; this is exactly
        the same computation as evaluating each one on its own.
        """
        if len(sequences) == 0:
            raise EmptySequence("no sequences given")
        by_length: dict[int, list[int]] = defaultdict(list)
        for i, seq in enumerate(sequences):
            seq = np.asarray(seq)
            if seq.ndim != 2 or seq.shape[0] == 0:
                raise EmptySequence(f"sequence {i} has shape {seq.shape}")
            if seq.shape[1] != self.input_dim:
                raise DimensionMismatch(
                    f"sequence {i} has {seq.shape[1]} channels, expected {self.input_dim}"
                )
            by_length[seq.shape[0]].append(i)
        blocks, order = [], []
        for length in sorted(by_length):
            idx = by_length[length]
            blocks.append(self._group(np.stack([np.asarray(sequences[i], float) for i in idx])))
            order += idx
        feats = blocks[0] if len(blocks) == 1 else ad.concat(blocks, axis=0)
        if order != list(range(len(order))):
            feats = feats[np.argsort(order)]
        return ad.transpose(feats)


def extract_features(x, extractor: FeatureExtractor) -> np.ndarray:
    """Feature vector (length ``d_f``) of one sequence given as ``l x d_x``."""
    frames = x.frames if hasattr(x, "frames") else np.asarray(x, dtype=np.float64)
    return extractor([frames]).data[:, 0].copy()
