"""Shared oracles for the test-suite."""

import numpy as np

from gzsl import autodiff as ad


def numeric_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. the array ``x`` (mutated in place)."""
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + eps
        up = f()
        x[i] = old - eps
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8))


def check_grads(loss_fn, params, eps: float = 1e-5) -> float:
    """Worst relative error between backprop and central differences over ``params``.

    ``loss_fn`` builds a fresh graph each call and returns a scalar Tensor.
    """
    for p in params:
        p.grad = None
    ad.backward(loss_fn())
    worst = 0.0
    for p in params:
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        numeric = numeric_grad(lambda: float(loss_fn().data), p.data, eps)
        worst = max(worst, rel_error(analytic, numeric))
    return worst


def random_spd(rng, m: int) -> np.ndarray:
    a = rng.normal(size=(m, m))
    return a @ a.T + 0.1 * np.eye(m)


def random_laplacian(rng, n: int) -> np.ndarray:
    w = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.5), 1)
    w = w + w.T
    return np.diag(w.sum(axis=0)) - w


def check_grads_sampled(loss_fn, params, rng, per_param: int = 12, eps: float = 1e-5) -> float:
    """Like :func:`check_grads` but probes at most ``per_param`` entries of each parameter."""
    for p in params:
        p.grad = None
    ad.backward(loss_fn())
    analytic, numeric = [], []
    for p in params:
        grad = np.zeros_like(p.data) if p.grad is None else p.grad
        flat = rng.choice(p.data.size, size=min(per_param, p.data.size), replace=False)
        for idx in zip(*np.unravel_index(flat, p.data.shape)):
            old = p.data[idx]
            p.data[idx] = old + eps
            up = float(loss_fn().data)
            p.data[idx] = old - eps
            down = float(loss_fn().data)
            p.data[idx] = old
            analytic.append(grad[idx])
            numeric.append((up - down) / (2 * eps))
    return rel_error(np.array(analytic), np.array(numeric))


def tiny_model(rng, d_x: int = 4, hidden: int = 3, seen=(0, 2), unseen=(1, 3), gammas=(1e-3, 1e-4, 0.1)):
    """A full model with miniature widths: d_x inputs, 2 * hidden features."""
    from gzsl.features import BranchAttentionParams, FeatureExtractor, SelfAttentionParams
    from gzsl.model import EmotionHead, GzslModel
    from gzsl.nn import create_blstm
    from gzsl.pbd import PrototypeModel
    from gzsl.stae import StaeModel

    d_f = 2 * hidden
    em_map = {0: 0, 1: 0, 2: 1, 3: 1}
    attrs = rng.random((4, len(seen) + len(unseen)))
    attrs /= np.linalg.norm(attrs, axis=0)
    pbd = PrototypeModel.create(rng, len(seen), d_f=d_f)
    pbd.thresholds.data[...] = rng.uniform(0.5, 1.5, len(seen))
    stae = StaeModel.create(attrs[:, : len(seen)], attrs[:, len(seen):], *gammas, d_h=d_f)
    stae.u.data[...] = rng.normal(0.0, 0.3, stae.u.shape)
    return GzslModel(
        extractor=FeatureExtractor(
            SelfAttentionParams.create(rng, d_x, 2, name="shared.attn"),
            create_blstm(rng, d_x, hidden=hidden, name="shared.blstm"),
        ),
        attn_pbd=BranchAttentionParams.create(rng, d_f, "pbd.attn"),
        attn_stae=BranchAttentionParams.create(rng, d_f, "stae.attn"),
        attn_em=BranchAttentionParams.create(rng, d_f, "em.attn"),
        pbd=pbd,
        stae=stae,
        emotion=EmotionHead.create(rng, 2, d_f=d_f),
        seen=tuple(seen),
        unseen=tuple(unseen),
        em_map=em_map,
    )


def tiny_samples(rng, model, per_class: int = 2, lengths=(3, 5), classes=None, split="train"):
    from gzsl.data import SkeletonSequence

    d_x = model.extractor.input_dim
    out = []
    for g in classes if classes is not None else model.seen:
        for i in range(per_class):
            n = int(rng.integers(lengths[0], lengths[1] + 1))
            frames = rng.normal(0.3 * g, 1.0, (n, d_x))
            out.append(SkeletonSequence(f"g{g}-{split}-{i}", frames, g, model.em_map[g], 0, split))
    return out
