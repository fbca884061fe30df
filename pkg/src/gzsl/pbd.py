"""Prototype-based detector.

Features are projected to a 20-d prototype space by two FC layers. Each
seen class owns one prototype and one distance threshold; a projection
whose squared distance to the nearest prototype exceeds that prototype's
threshold is declared to come from an unseen class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionMismatch, LabelOutOfRange
from .nn import Linear

PROTO_DIM = 20
PROJ_HIDDEN = 50
GAMMA = 0.5


@dataclass
class PrototypeModel:
    fc1: Linear
    fc2: Linear
    prototypes: Tensor  # C_s x 20
    thresholds: Tensor  # C_s, raw; clamped at evaluation only
    gamma: float = GAMMA

    @classmethod
    def create(cls, rng: np.random.Generator, n_seen: int, d_f: int = 128, gamma: float = GAMMA):
        return cls(
            Linear.create(rng, d_f, PROJ_HIDDEN, "pbd.fc1"),
            Linear.create(rng, PROJ_HIDDEN, PROTO_DIM, "pbd.fc2"),
            Tensor(rng.normal(0.0, 0.1, size=(n_seen, PROTO_DIM)), True, "pbd.prototypes"),
            Tensor(np.zeros(n_seen), True, "pbd.thresholds"),
            gamma,
        )

    @property
    def n_classes(self) -> int:
        return self.prototypes.shape[0]

    def parameters(self) -> list[Tensor]:
        return self.fc1.parameters() + self.fc2.parameters() + [self.prototypes, self.thresholds]


def project(h_pbd, model: PrototypeModel) -> Tensor:
    """``fc2(relu(fc1(h)))`` for a ``d_f`` vector or a ``d_f x n`` batch."""
    h = ad.as_tensor(h_pbd)
    cols = ad.reshape(h, (-1, 1)) if h.ndim == 1 else h
    p = model.fc2(ad.relu(model.fc1(cols)))
    return ad.reshape(p, (-1,)) if h.ndim == 1 else p


def squared_distances(P, prototypes) -> Tensor:
    """``d[k, i] = ||p_i - m(k)||^2`` for ``P`` of shape ``20 x n``."""
    P, M = ad.as_tensor(P), ad.as_tensor(prototypes)
    if P.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"projections {P.shape} vs prototypes {M.shape}")
    diff = ad.reshape(P, (1,) + P.shape) - ad.reshape(M, M.shape + (1,))
    return ad.sum(ad.square(diff), axis=1)


def _check_labels(labels, model: PrototypeModel, n: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (n,):
        raise DimensionMismatch(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= model.n_classes):
        raise LabelOutOfRange(f"seen labels must lie in [0, {model.n_classes})")
    return labels


def dce_loss(P, labels, model: PrototypeModel) -> Tensor:
    """Distance-based cross entropy: softmax over ``-gamma * d`` per sample."""
    d = squared_distances(P, model.prototypes)
    labels = _check_labels(labels, model, d.shape[1])
    log_probs = ad.log_softmax(d * (-model.gamma), axis=0)
    return -ad.mean(ad.take_along_axis(log_probs, labels[None, :], axis=0))


def prototype_loss(P, labels, model: PrototypeModel) -> Tensor:
    d = squared_distances(P, model.prototypes)
    labels = _check_labels(labels, model, d.shape[1])
    return ad.mean(ad.take_along_axis(d, labels[None, :], axis=0))


def threshold_losses(P, labels, model: PrototypeModel) -> tuple[Tensor, Tensor]:
    """Hinge on the nearest-prototype margin, and the squared-threshold penalty.

    ``labels`` are only validated; the hinge uses the nearest prototype,
    whatever the true class.
    """
    d = squared_distances(P, model.prototypes)
    _check_labels(labels, model, d.shape[1])
    nearest = np.argmin(d.data, axis=0)
    d_min = ad.take_along_axis(d, nearest[None, :], axis=0)
    th = ad.reshape(model.thresholds, (-1, 1))
    th_nearest = ad.take_along_axis(th, nearest[None, :], axis=0)
    l_th1 = ad.mean(ad.relu(d_min - th_nearest))
    l_th2 = ad.sum(ad.square(model.thresholds))
    return l_th1, l_th2


@dataclass(frozen=True)
class PbdLosses:
    dce: Tensor
    pl: Tensor
    th1: Tensor
    th2: Tensor
    total: Tensor


def pbd_total_loss(P, labels, model: PrototypeModel, beta1: float, beta2: float, beta3: float):
    dce = dce_loss(P, labels, model)
    pl = prototype_loss(P, labels, model)
    th1, th2 = threshold_losses(P, labels, model)
    total = dce + pl * beta1 + th1 * beta2 + th2 * beta3
    return PbdLosses(dce, pl, th1, th2, total)


@dataclass(frozen=True)
class GateDecision:
    nearest_class: int
    delta_d: float

    @property
    def seen(self) -> bool:
        return self.delta_d <= 0.0

    @property
    def verdict(self) -> str:
        return f"seen({self.nearest_class})" if self.seen else "unseen"


def gate_batch(P: np.ndarray, prototypes: np.ndarray, thresholds: np.ndarray):
    """Nearest prototype and distance margin for each column of ``P``.

    Returns ``(nearest, delta_d)``; a column is gated seen iff its
    ``delta_d <= 0``. Thresholds are clamped at zero and ties between
    equidistant prototypes go to the lowest class index.
    """
    P = np.asarray(P, dtype=np.float64)
    M = np.asarray(prototypes, dtype=np.float64)
    th = np.maximum(np.asarray(thresholds, dtype=np.float64), 0.0)
    d = ((P[None, :, :] - M[:, :, None]) ** 2).sum(axis=1)
    nearest = np.argmin(d, axis=0)
    delta = d[nearest, np.arange(d.shape[1])] - th[nearest]
    return nearest, delta


def gate(p, model: PrototypeModel) -> GateDecision:
    nearest, delta = gate_batch(
        np.asarray(p, dtype=np.float64)[:, None], model.prototypes.data, model.thresholds.data
    )
    return GateDecision(int(nearest[0]), float(delta[0]))
