"""Stacked autoencoder with manifold regularisation.

The encoder maps features to the attribute space with ``U^T`` and then to
the label space with ``A^T``; the decoder ties its weights to ``A`` and
``U``. Only ``U`` is learned. At test time the label scores of the
unseen-class samples are obtained jointly from a Sylvester equation whose
second coefficient is the Laplacian of a cosine kNN graph over those
samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionMismatch, EmptyBatch
from .numerics import graph_laplacian, knn_cosine_graph, knn_mask, solve_sylvester

NEIGHBORS = 5


def normalize_columns(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=0, keepdims=True)
    return a / np.where(norms == 0.0, 1.0, norms)


@dataclass
class StaeModel:
    u: Tensor  # d_h x d_s
    a_seen: np.ndarray  # d_s x C_s
    a_unseen: np.ndarray  # d_s x C_u
    gamma1: float
    gamma2: float
    gamma3: float
    q: int = NEIGHBORS
    r: int = NEIGHBORS

    @classmethod
    def create(cls, a_seen, a_unseen, gamma1, gamma2, gamma3, d_h: int = 128):
        a_seen = np.asarray(a_seen, dtype=np.float64)
        u = Tensor(np.zeros((d_h, a_seen.shape[0])), requires_grad=True, name="stae.u")
        return cls(u, a_seen, np.asarray(a_unseen, dtype=np.float64), gamma1, gamma2, gamma3)

    def parameters(self) -> list[Tensor]:
        return [self.u]


def onehot(labels, n_classes: int) -> np.ndarray:
    """``n_classes x n`` matrix with a single one per column."""
    labels = np.asarray(labels, dtype=np.intp)
    y = np.zeros((n_classes, labels.size))
    y[labels, np.arange(labels.size)] = 1.0
    return y


def feature_regularizer(h_tr, model: StaeModel) -> Tensor:
    """``tr(B L B^T)`` with ``B = A_s^T U^T`` and ``L`` the Laplacian of the
    cosine kNN graph whose vertices are the feature dimensions (rows) of
    ``h_tr``.

    Evaluated as ``sum_k deg_k ||b_k||^2 - sum_kl W_kl b_k . b_l``. The
    neighbour sets are fixed by the current values of ``h_tr``; the cosine
    weights on those edges are differentiated like any other operation.
    """
    h = ad.as_tensor(h_tr)
    if h.shape[1] < 2:
        raise ValueError("feature graph needs at least two samples")
    mask = knn_mask(h.data, min(model.r, h.shape[0] - 1), axis="features")
    unit = h / ad.sqrt(ad.sum(ad.square(h), axis=1, keepdims=True))
    weights = ad.matmul(unit, ad.transpose(unit)) * mask
    b = ad.matmul(Tensor(model.a_seen.T), ad.transpose(model.u))  # C_s x d_h
    gram = ad.matmul(ad.transpose(b), b)
    sq_norms = ad.sum(ad.square(b), axis=0)
    return ad.sum(ad.sum(weights, axis=0) * sq_norms) - ad.sum(weights * gram)


def stae_train_loss(h_tr, y_onehot, model: StaeModel, reduction: str = "sum") -> Tensor:
    """Reconstruction plus label-space loss plus the feature-graph penalty.

    With ``reduction="mean"`` the two Frobenius terms are divided by the
    number of samples; the graph penalty depends on ``U`` only and is never
    rescaled.
    """
    h = ad.as_tensor(h_tr)
    y = np.asarray(y_onehot, dtype=np.float64)
    d_h, n = h.shape
    if y.shape != (model.a_seen.shape[1], n) or model.u.shape != (d_h, model.a_seen.shape[0]):
        raise DimensionMismatch(
            f"h={h.shape}, y={y.shape}, U={model.u.shape}, A_s={model.a_seen.shape}"
        )
    semantic_targets = Tensor(model.a_seen @ y)  # d_s x n
    recon = h - ad.matmul(model.u, semantic_targets)
    label_err = ad.matmul(Tensor(model.a_seen.T), ad.matmul(ad.transpose(model.u), h)) - Tensor(y)
    loss = ad.sum(ad.square(recon)) + ad.sum(ad.square(label_err)) * model.gamma1
    if reduction == "mean":
        loss = loss * (1.0 / n)
    elif reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    if model.gamma3 != 0.0 and n >= 2:
        loss = loss + feature_regularizer(h, model) * model.gamma3
    return loss


def ridge_init(h_tr: np.ndarray, labels, a_seen: np.ndarray, reg: float = 1e-3) -> np.ndarray:
    """Closed-form ``U`` minimising ``||H - U S||^2 + reg * n * ||U||^2``
    with ``S = A_s Y^T``."""
    h_tr = np.asarray(h_tr, dtype=np.float64)
    s = a_seen @ onehot(labels, a_seen.shape[1])
    n = h_tr.shape[1]
    gram = s @ s.T + reg * n * np.eye(s.shape[0])
    return np.linalg.solve(gram, s @ h_tr.T).T


@dataclass(frozen=True)
class UnseenPrediction:
    scores: np.ndarray  # C_u x N
    labels: np.ndarray  # index into the unseen classes


def sylvester_terms(h_te: np.ndarray, model: StaeModel, transductive: bool = True):
    """Coefficients ``(A_sy, B_sy, C_sy)`` of the test-time Sylvester equation."""
    h_te = np.asarray(h_te, dtype=np.float64)
    if h_te.ndim != 2 or h_te.shape[1] == 0:
        raise EmptyBatch("no samples to infer")
    u = model.u.data
    if h_te.shape[0] != u.shape[0]:
        raise DimensionMismatch(f"features have {h_te.shape[0]} rows, U has {u.shape[0]}")
    proj = u @ model.a_unseen  # d_h x C_u
    n_unseen = proj.shape[1]
    a_sy = proj.T @ proj + model.gamma1 * np.eye(n_unseen)
    n = h_te.shape[1]
    if transductive and model.gamma2 != 0.0 and n > 1:
        k = min(model.q, n - 1)
        b_sy = model.gamma2 * graph_laplacian(knn_cosine_graph(h_te, k, axis="instances"))
    else:
        b_sy = np.zeros((n, n))
    c_sy = (model.gamma1 + 1.0) * proj.T @ h_te
    return a_sy, b_sy, c_sy


def stae_infer(h_te, model: StaeModel, transductive: bool = True) -> UnseenPrediction:
    """Score the columns of ``h_te`` against the unseen classes.

    In transductive mode all columns are coupled through the instance
    graph; otherwise each column is solved on its own (equivalent to
    ``gamma2 = 0``). Ties in the final argmax go to the lowest index.
    """
    a_sy, b_sy, c_sy = sylvester_terms(h_te, model, transductive)
    y_t = solve_sylvester(a_sy, b_sy, c_sy)
    return UnseenPrediction(scores=y_t, labels=np.argmax(y_t, axis=0))
