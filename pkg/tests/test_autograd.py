import numpy as np
import pytest

from espnetv2 import autograd as ag
from espnetv2.errors import ShapeError
from espnetv2.tensor import make_rng
from oracles import central_diff, rel_err


def grad_check(build, arrays, tol=1e-6, coords=3):
    """FD-check gradients of sum(build(*vars) * proj) per input array."""
    vs = [ag.param(np.asarray(a, dtype=np.float64).copy()) for a in arrays]
    out = build(*vs)
    scalar = out.data.size == 1
    proj = make_rng(99).standard_normal(out.shape)
    ag.zero_grads(vs)
    out.backward(None if scalar else proj)

    def value():
        y = build(*vs).data
        return float(y) if scalar else float((y * proj).sum())

    rng = make_rng(5)
    for v in vs:
        assert v.grad is not None and v.grad.shape == v.data.shape
        flat = [np.unravel_index(int(i), v.data.shape)
                for i in rng.choice(v.data.size, min(coords, v.data.size),
                                    replace=False)]
        for idx in flat:
            fd = central_diff(value, v.data, idx)
            assert rel_err(fd, v.grad[idx]) < tol, (v.data.shape, idx)


def test_add_mul_scale_grads(rng):
    a, b = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
    grad_check(lambda x, y: ag.mul(ag.add(x, y), y), [a, b])
    grad_check(lambda x: ag.scale(x, -2.5), [a])


def test_reuse_in_graph_accumulates():
    x = ag.param(np.array([3.0]))
    y = ag.add(ag.mul(x, x), x)  # x^2 + x
    y.backward()
    assert np.allclose(x.grad, 2 * 3.0 + 1)


def test_deep_chain_backward_is_iterative():
    x = ag.param(np.ones(1))
    y = x
    for _ in range(5000):
        y = ag.add(y, x)
    y.backward()
    assert float(x.grad[0]) == 5001.0


def test_backward_guards():
    with pytest.raises(ValueError):
        ag.as_var(np.ones(3)).backward()
    v = ag.param(np.ones(3))
    with pytest.raises(ShapeError):
        ag.add(v, v).backward()  # non-scalar needs a seed


def test_reshape_concat_slice_grads(rng):
    a = rng.standard_normal((2, 6))
    grad_check(lambda x: ag.reshape(x, (3, 4)), [a])
    p1, p2 = rng.standard_normal((2, 2, 3, 3)), rng.standard_normal((2, 1, 3, 3))
    grad_check(lambda x, y: ag.concat_channels([x, y]), [p1, p2])
    grad_check(lambda x: ag.slice_channels(x, 1, 3), [rng.standard_normal((2, 4, 3, 3))])


def test_prelu_grads(rng):
    x = rng.standard_normal((2, 3, 4, 4))
    s = rng.uniform(0.1, 0.9, 3)
    grad_check(lambda a, b: ag.prelu(a, b), [x, s])


def test_batch_norm_grads_train_and_eval(rng):
    x = rng.standard_normal((4, 3, 5, 5))
    gamma, beta = rng.uniform(0.5, 1.5, 3), rng.standard_normal(3)
    for train in (True, False):
        grad_check(
            lambda a, g, b: ag.batch_norm(a, g, b, np.zeros(3), np.ones(3),
                                          train)[0],
            [x, gamma, beta], tol=1e-5)


def test_conv_ops_grads(rng):
    x = rng.standard_normal((2, 4, 7, 7))
    w = rng.standard_normal((6, 2, 3, 3))
    grad_check(lambda a, b: ag.conv2d(a, b, stride=2, dilation=2, groups=2,
                                      pad=2), [x, w], tol=1e-5)
    x1 = rng.standard_normal((2, 4, 9))
    w1 = rng.standard_normal((4, 1, 3))
    grad_check(lambda a, b: ag.conv1d(a, b, dilation=2, groups=4, pad=2),
               [x1, w1], tol=1e-5)


def test_pool_grads(rng):
    grad_check(lambda a: ag.avg_pool_3x3_s2(a),
               [rng.standard_normal((2, 3, 7, 7))])
    grad_check(lambda a: ag.global_avg_pool(a),
               [rng.standard_normal((2, 4, 5, 5))])


def test_linear_and_activation_grads(rng):
    x, w, b = (rng.standard_normal((3, 4)), rng.standard_normal((4, 2)),
               rng.standard_normal(2))
    grad_check(lambda a, ww, bb: ag.linear(a, ww, bb), [x, w, b])
    z = rng.standard_normal((2, 5))
    grad_check(lambda a: ag.sigmoid(a), [z])
    grad_check(lambda a: ag.tanh(a), [z])


def test_softmax_cross_entropy_value_and_grad(rng):
    logits = rng.standard_normal((4, 5))
    labels = np.array([0, 2, 4, 1])
    # direct log-softmax evaluation as the reference value
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    want = -logp[np.arange(4), labels].mean()
    out = ag.softmax_cross_entropy(ag.as_var(logits), labels)
    assert abs(float(out.data) - want) < 1e-12
    grad_check(lambda a: ag.softmax_cross_entropy(a, labels), [logits])


def test_sigmoid_binary_cross_entropy_grad(rng):
    z = rng.standard_normal(8) * 3
    t = (rng.uniform(size=8) > 0.5).astype(np.float64)
    grad_check(lambda a: ag.sigmoid_binary_cross_entropy(a, t), [z])
    # extreme logits stay finite
    hot = ag.sigmoid_binary_cross_entropy(ag.param(np.array([80.0, -80.0])),
                                          np.array([1.0, 0.0]))
    assert float(hot.data) < 1e-30
