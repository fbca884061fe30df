import numpy as np
import pytest

from gzsl import autodiff as ad
from gzsl.autodiff import Tensor
from gzsl.errors import NonScalarLoss

from helpers import check_grads


def param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


UNARY = {
    "neg": ad.neg,
    "square": ad.square,
    "exp": ad.exp,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "relu": ad.relu,
    "sum0": lambda a: ad.sum(a, axis=0),
    "mean1": lambda a: ad.mean(a, axis=1, keepdims=True),
    "transpose": ad.transpose,
    "reshape": lambda a: ad.reshape(a, (-1,)),
    "softmax0": lambda a: ad.softmax(a, axis=0),
    "log_softmax1": lambda a: ad.log_softmax(a, axis=1),
    "getitem": lambda a: a[1:, ::2],
    "fancy": lambda a: a[np.array([0, 2, 0])],
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_gradients(rng, name):
    a = param(rng, 3, 4)
    weights = rng.normal(size=UNARY[name](a).shape)
    assert check_grads(lambda: ad.sum(UNARY[name](a) * weights), [a]) < 1e-6


def test_log_gradient(rng):
    a = Tensor(rng.uniform(0.5, 2.0, size=(3, 2)), requires_grad=True)
    assert check_grads(lambda: ad.sum(ad.log(a)), [a]) < 1e-6


@pytest.mark.parametrize("op", [ad.add, ad.sub, ad.mul, ad.div])
def test_binary_broadcast_gradients(rng, op):
    a = param(rng, 3, 4)
    b = Tensor(rng.uniform(0.5, 1.5, size=(4,)), requires_grad=True)
    w = rng.normal(size=(3, 4))
    assert check_grads(lambda: ad.sum(op(a, b) * w), [a, b]) < 1e-6


def test_matmul_batched(rng):
    a, b = param(rng, 2, 3, 4), param(rng, 4, 5)
    w = rng.normal(size=(2, 3, 5))
    assert check_grads(lambda: ad.sum(ad.matmul(a, b) * w), [a, b]) < 1e-6


def test_concat_stack_take(rng):
    a, b = param(rng, 2, 3), param(rng, 2, 2)
    idx = np.array([[0, 2, 1]])
    w = rng.normal(size=(2, 5))

    def loss():
        cat = ad.concat([a, b], axis=1)
        st = ad.stack([a, a * 2.0], axis=0)
        return ad.sum(cat * w) + ad.sum(ad.take_along_axis(a, idx, axis=1)) + ad.sum(ad.square(st))

    assert check_grads(loss, [a, b]) < 1e-6


def test_take_along_axis_broadcast(rng):
    a = param(rng, 3, 1)
    idx = np.array([[0, 2, 2, 1]])
    out = ad.take_along_axis(a, idx, axis=0)
    np.testing.assert_array_equal(out.data, a.data[idx[0], 0][None])
    assert check_grads(lambda: ad.sum(ad.take_along_axis(a, idx, axis=0)), [a]) < 1e-6


def test_shared_subexpression_and_leaf_only_grads(rng):
    a = param(rng, 2, 2)
    mid = a * a
    loss = ad.sum(mid + mid)
    leaves = ad.backward(loss)
    np.testing.assert_allclose(a.grad, 4 * a.data)
    assert leaves == [a] and mid.grad is None


def test_grad_accumulates_across_backward_calls(rng):
    a = param(rng, 2)
    ad.backward(ad.sum(a))
    ad.backward(ad.sum(a))
    np.testing.assert_array_equal(a.grad, [2.0, 2.0])


def test_non_scalar_loss():
    with pytest.raises(NonScalarLoss):
        ad.backward(Tensor(np.ones(3), requires_grad=True))


def test_softmax_stable_for_large_inputs():
    s = ad.softmax(Tensor([1000.0, 1000.0, -1000.0]), axis=0).data
    np.testing.assert_allclose(s, [0.5, 0.5, 0.0])
    assert np.isfinite(ad.log_softmax(Tensor([1e4, 0.0]), axis=0).data).all()


def naive_lstm(x, w_x, w_h, b, reverse=False):
    """Step-by-step LSTM built from elementary ops (oracle for the fused kernel)."""
    length, batch, _ = x.shape
    H = w_h.shape[1]
    h = Tensor(np.zeros((batch, H)))
    c = Tensor(np.zeros((batch, H)))
    outs = [None] * length
    steps = range(length - 1, -1, -1) if reverse else range(length)
    for t in steps:
        z = ad.matmul(x[t], ad.transpose(w_x)) + ad.matmul(h, ad.transpose(w_h)) + b
        i, f = ad.sigmoid(z[:, :H]), ad.sigmoid(z[:, H : 2 * H])
        o, g = ad.sigmoid(z[:, 2 * H : 3 * H]), ad.tanh(z[:, 3 * H :])
        c = f * c + i * g
        h = o * ad.tanh(c)
        outs[t] = h
    return ad.stack(outs, axis=0)


@pytest.mark.parametrize("reverse", [False, True])
def test_lstm_matches_naive_and_finite_differences(rng, reverse):
    x, w_x, w_h, b = param(rng, 4, 2, 3), param(rng, 8, 3), param(rng, 8, 2), param(rng, 8)
    fused = ad.lstm_sequence(x, w_x, w_h, b, reverse=reverse)
    np.testing.assert_allclose(fused.data, naive_lstm(x, w_x, w_h, b, reverse).data, atol=1e-13)
    w = rng.normal(size=fused.shape)
    assert check_grads(lambda: ad.sum(ad.lstm_sequence(x, w_x, w_h, b, reverse=reverse) * w), [x, w_x, w_h, b]) < 1e-6
