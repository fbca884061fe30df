import numpy as np
import pytest

from gzsl import autodiff as ad
from gzsl.autodiff import Tensor
from gzsl.errors import DimensionMismatch, LabelOutOfRange
from gzsl.pbd import (
    PROTO_DIM,
    PrototypeModel,
    dce_loss,
    gate,
    gate_batch,
    pbd_total_loss,
    project,
    prototype_loss,
    squared_distances,
    threshold_losses,
)

from helpers import check_grads


def small_model(rng, n_classes=3, dim=4, d_f=5):
    m = PrototypeModel.create(rng, n_classes, d_f=d_f)
    m.prototypes = Tensor(rng.normal(size=(n_classes, dim)), True, "pbd.prototypes")
    m.thresholds = Tensor(rng.uniform(0.0, 2.0, n_classes), True, "pbd.thresholds")
    return m


def loss_oracle(P, labels, M, th, gamma):
    """Per-sample loops over the definitions."""
    n, C = P.shape[1], M.shape[0]
    dce = pl = th1 = 0.0
    for i in range(n):
        d = np.array([np.sum((P[:, i] - M[k]) ** 2) for k in range(C)])
        logits = -gamma * d
        dce += -(logits[labels[i]] - np.log(np.sum(np.exp(logits))))
        pl += d[labels[i]]
        k = int(np.argmin(d))
        th1 += max(0.0, d[k] - th[k])
    return dce / n, pl / n, th1 / n, float(np.sum(th**2))


@pytest.mark.parametrize("seed", range(50))
def test_losses_match_oracle(seed):
    rng = np.random.default_rng(seed)
    C, n = rng.integers(2, 5), rng.integers(1, 7)
    m = small_model(rng, C)
    P = rng.normal(size=(4, n))
    labels = rng.integers(0, C, n)
    dce, pl, th1, th2 = loss_oracle(P, labels, m.prototypes.data, m.thresholds.data, m.gamma)
    assert abs(dce_loss(P, labels, m).data - dce) <= 1e-9
    assert abs(prototype_loss(P, labels, m).data - pl) <= 1e-9
    l1, l2 = threshold_losses(P, labels, m)
    assert abs(l1.data - th1) <= 1e-9 and abs(l2.data - th2) <= 1e-9


def test_distance_examples(rng):
    m = small_model(rng, 2)
    P = m.prototypes.data.T.copy()
    assert prototype_loss(P, [0, 1], m).data == 0.0
    M = np.zeros((1, 3))
    np.testing.assert_allclose(squared_distances(np.array([[2.0], [0.0], [0.0]]), M).data, [[4.0]])


def test_threshold_examples(rng):
    m = small_model(rng, 2)
    P = rng.normal(size=(4, 5))
    m.thresholds.data[:] = 1e9
    assert threshold_losses(P, np.zeros(5, int), m)[0].data == 0.0
    m.thresholds.data[:] = 0.0
    d = squared_distances(P, m.prototypes).data
    assert abs(threshold_losses(P, np.zeros(5, int), m)[0].data - d.min(axis=0).mean()) < 1e-12
    m.thresholds.data[:] = [1.0, 2.0]
    assert threshold_losses(P, np.zeros(5, int), m)[1].data == 5.0


def test_total_weighting(rng):
    m = small_model(rng)
    P, labels = rng.normal(size=(4, 6)), rng.integers(0, 3, 6)
    assert pbd_total_loss(P, labels, m, 0, 0, 0).total.data == dce_loss(P, labels, m).data
    parts = pbd_total_loss(P, labels, m, 4.0, 0.1, 1.0)
    expected = parts.dce.data + 4.0 * parts.pl.data + 0.1 * parts.th1.data + 1.0 * parts.th2.data
    assert abs(parts.total.data - expected) < 1e-12
    assert parts.total.data >= 0


def test_label_errors(rng):
    m = small_model(rng)
    with pytest.raises(LabelOutOfRange):
        dce_loss(np.zeros((4, 2)), [0, 3], m)
    with pytest.raises(DimensionMismatch):
        prototype_loss(np.zeros((4, 2)), [0], m)
    with pytest.raises(DimensionMismatch):
        squared_distances(np.zeros((3, 2)), m.prototypes)


def test_gradients_through_projection():
    rng = np.random.default_rng(7)
    m = PrototypeModel.create(rng, 3, d_f=6)
    m.thresholds.data[:] = [0.5, 3.0, 1.0]
    h = Tensor(rng.normal(size=(6, 5)), requires_grad=True)
    labels = np.array([0, 1, 2, 1, 0])
    params = m.parameters() + [h]
    assert check_grads(lambda: pbd_total_loss(project(h, m), labels, m, 4.0, 0.1, 1.0).total, params) < 1e-4


def gate_oracle(P, M, th):
    out = []
    for i in range(P.shape[1]):
        d = [float(np.sum((P[:, i] - M[k]) ** 2)) for k in range(M.shape[0])]
        best = min(range(len(d)), key=lambda k: (d[k], k))
        out.append((best, d[best] - max(th[best], 0.0)))
    return out


@pytest.mark.parametrize("seed", range(20))
def test_gate_matches_oracle_with_ties(seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-2, 3, size=(4, 3)).astype(float)
    M[3] = M[1]  # duplicate prototype forces ties
    P = rng.integers(-2, 3, size=(3, 30)).astype(float)
    th = rng.integers(-1, 4, size=4).astype(float)
    nearest, delta = gate_batch(P, M, th)
    for i, (k, dd) in enumerate(gate_oracle(P, M, th)):
        assert nearest[i] == k and delta[i] == dd


def test_gate_examples(rng):
    m = PrototypeModel.create(rng, 3)
    m.thresholds.data[:] = [0.2, 0.3, 0.4]
    on_proto = gate(m.prototypes.data[1], m)
    assert on_proto.nearest_class == 1 and on_proto.seen and on_proto.verdict == "seen(1)"
    assert on_proto.delta_d == -0.3
    far = gate(np.full(PROTO_DIM, 100.0), m)
    assert not far.seen and far.verdict == "unseen"
