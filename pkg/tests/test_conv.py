import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from espnetv2 import backend as bk
from espnetv2.conv import (ConvSpec, avg_pool_3x3_s2, conv_backward,
                           conv_forward, cost_reduction_separable,
                           effective_receptive_field, global_avg_pool,
                           mac_count, out_extent, param_count,
                           separable_mac_count, separable_param_count)
from espnetv2.errors import ConfigError, ShapeError
from espnetv2.tensor import make_rng
from oracles import central_diff, reference_conv1d, reference_conv2d, rel_err


@pytest.fixture(params=bk.available_backends())
def any_backend(request):
    previous = bk.active_backend()
    bk.set_backend(request.param)
    yield request.param
    bk.set_backend(previous)


def test_spec_validation_errors():
    with pytest.raises(ConfigError):
        ConvSpec("standard", 3, 8, 4)  # even kernel
    with pytest.raises(ConfigError):
        ConvSpec("standard", 3, 8, 3, stride=3)
    with pytest.raises(ConfigError):
        ConvSpec("group", 6, 8, 1, groups=4)  # 4 does not divide 6
    with pytest.raises(ConfigError):
        ConvSpec("depthwise", 6, 8, 3, groups=6)  # must preserve channels
    with pytest.raises(ConfigError):
        ConvSpec("depthwise", 6, 6, 3, groups=6, dilation=2)
    with pytest.raises(ConfigError):
        ConvSpec("pointwise", 6, 6, 3)
    with pytest.raises(ConfigError):
        ConvSpec("nope", 3, 3, 3)


def test_classmethods_pick_the_kind():
    assert ConvSpec.standard(8, 16, 1).kind == "pointwise"
    assert ConvSpec.standard(8, 16, 3).kind == "standard"
    assert ConvSpec.group(8, 16, 1, 4).kind == "group"
    assert ConvSpec.group(8, 16, 3, 1).kind == "standard"
    assert ConvSpec.depthwise(8, 3).kind == "depthwise"
    assert ConvSpec.depthwise(8, 3, dilation=2).kind == "depthwise_dilated"


def test_same_padding_default():
    assert ConvSpec.standard(3, 8, 3).padding == 1
    assert ConvSpec.depthwise(8, 3, dilation=4).padding == 4
    assert ConvSpec.standard(3, 8, 1).padding == 0


def test_out_extent():
    assert out_extent(224, 3, 2, 1, 1) == 112
    assert out_extent(14, 3, 1, 4, 4) == 14
    assert out_extent(7, 3, 2, 2, 2) == 4
    with pytest.raises(ShapeError):
        out_extent(3, 3, 1, 4, 0)


def test_param_and_mac_counts():
    spec = ConvSpec.standard(32, 64, 3)
    assert param_count(spec) == 9 * 32 * 64
    assert mac_count(spec, 10, 10) == 9 * 32 * 64 * 100
    spec = ConvSpec.group(32, 64, 1, 4)
    assert param_count(spec) == 32 * 64 // 4
    spec = ConvSpec.depthwise(32, 3, dilation=7)  # dilation is cost-free
    assert param_count(spec) == 9 * 32
    spec = ConvSpec("pointwise", 8, 4, 1, bias=True)
    assert param_count(spec) == 8 * 4 + 4


def test_separable_costs():
    # depthwise 3x3 on 240 channels plus 240->120 pointwise
    assert separable_param_count(240, 120) == 9 * 240 + 240 * 120
    assert separable_mac_count(240, 120, 3, 10, 10) == (9 * 240 + 240 * 120) * 100
    # strided pair: depthwise runs at the wider pre-pointwise extent
    assert separable_mac_count(16, 32, 3, 5, 5, 10, 10) == 9 * 16 * 100 + 16 * 32 * 25
    assert cost_reduction_separable(3, 100, 100) == pytest.approx(
        9 * 100 * 100 / (9 * 100 + 100 * 100))


def test_effective_receptive_field():
    assert effective_receptive_field(3, 1) == 3
    assert effective_receptive_field(3, 4) == 9
    with pytest.raises(ConfigError):
        effective_receptive_field(4, 1)


KIND_CASES = [
    ConvSpec.standard(3, 6, 3),
    ConvSpec.standard(3, 6, 3, stride=2, dilation=2),
    ConvSpec.group(8, 4, 3, 2, dilation=3),
    ConvSpec.depthwise(5, 3, stride=2),
    ConvSpec.depthwise(4, 3, dilation=2),
    ConvSpec.standard(6, 2, 1),
    ConvSpec.group(8, 8, 1, 4),
]


@pytest.mark.parametrize("spec", KIND_CASES, ids=lambda s: s.kind + f"-s{s.stride}d{s.dilation}")
def test_forward_matches_scalar_loops(any_backend, spec):
    rng = make_rng(31)
    x = rng.standard_normal((2, spec.in_channels, 9, 9))
    w = rng.standard_normal(spec.weight_shape)
    want = reference_conv2d(x, w, spec.stride, spec.dilation, spec.groups,
                            spec.padding)
    assert np.abs(conv_forward(spec, w, x) - want).max() <= 1e-12


def test_forward_shape_errors(rng):
    spec = ConvSpec.standard(3, 4, 3)
    with pytest.raises(ShapeError):
        conv_forward(spec, rng.standard_normal(spec.weight_shape),
                     rng.standard_normal((2, 5, 8, 8)))
    with pytest.raises(ShapeError):
        conv_forward(spec, rng.standard_normal((4, 3, 3, 1)),
                     rng.standard_normal((2, 3, 8, 8)))


def test_bias_is_added_per_channel(rng):
    spec = ConvSpec("pointwise", 3, 4, 1, bias=True)
    x = rng.standard_normal((2, 3, 5, 5))
    w = rng.standard_normal(spec.weight_shape)
    b = rng.standard_normal(4)
    plain = conv_forward(ConvSpec.standard(3, 4, 1), w, x)
    assert np.allclose(conv_forward(spec, w, x, bias=b),
                       plain + b[None, :, None, None])
    # omitting the bias argument must fall back to the pure convolution
    assert np.allclose(conv_forward(spec, w, x), plain)


@pytest.mark.parametrize("spec", KIND_CASES[:4],
                         ids=lambda s: s.kind + f"-s{s.stride}d{s.dilation}")
def test_backward_matches_finite_differences(any_backend, spec):
    rng = make_rng(77)
    x = rng.standard_normal((2, spec.in_channels, 8, 8))
    w = rng.standard_normal(spec.weight_shape)
    gy = rng.standard_normal(conv_forward(spec, w, x).shape)
    gx, gw, _ = conv_backward(spec, w, x, gy)

    def loss():
        return float((conv_forward(spec, w, x) * gy).sum())

    for idx in [(0, 0, 0, 0), (1, spec.in_channels - 1, 3, 5)]:
        assert rel_err(central_diff(loss, x, idx), gx[idx]) < 1e-6
    for idx in [(0, 0, 0, 0), (spec.out_channels - 1, 0, 2, 1)]:
        assert rel_err(central_diff(loss, w, idx), gw[idx]) < 1e-6


def test_backends_agree(rng):
    if len(bk.available_backends()) < 2:
        pytest.skip("single backend build")
    spec = ConvSpec.group(8, 12, 3, 4, stride=2, dilation=2)
    x = rng.standard_normal((2, 8, 11, 11))
    w = rng.standard_normal(spec.weight_shape)
    gy_shape = conv_forward(spec, w, x).shape
    gy = rng.standard_normal(gy_shape)
    outs = {}
    previous = bk.active_backend()
    try:
        for name in bk.available_backends():
            bk.set_backend(name)
            outs[name] = (conv_forward(spec, w, x),
                          *conv_backward(spec, w, x, gy)[:2])
    finally:
        bk.set_backend(previous)
    a, b = outs["numba"], outs["numpy"]
    for ya, yb in zip(a, b):
        assert np.abs(ya - yb).max() <= 1e-12


def test_conv1d_matches_scalar_loops(any_backend):
    rng = make_rng(13)
    for stride, dilation, groups in [(1, 1, 1), (1, 2, 2), (2, 3, 4), (1, 1, 8)]:
        cin, cout = 8, 8
        k, pad = 3, dilation
        x = rng.standard_normal((2, cin, 9))
        w = rng.standard_normal((cout, cin // groups, k))
        got = bk.conv1d_forward(x, w, stride, dilation, groups, pad)
        want = reference_conv1d(x, w, stride, dilation, groups, pad)
        assert np.abs(got - want).max() <= 1e-12


def test_avg_pool_matches_manual(rng):
    x = rng.standard_normal((2, 3, 7, 7))
    got = avg_pool_3x3_s2(x)
    xp = np.zeros((2, 3, 9, 9))
    xp[:, :, 1:8, 1:8] = x
    want = np.zeros((2, 3, 4, 4))
    for i in range(4):
        for j in range(4):
            want[:, :, i, j] = xp[:, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3].sum(
                axis=(2, 3)) / 9.0  # fixed divisor, also at the border
    assert np.allclose(got, want, atol=1e-13)
    assert np.allclose(global_avg_pool(x), x.mean(axis=(2, 3)))


@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.sampled_from([1, 2, 3]),
       st.sampled_from([1, 2, 4]))
def test_forward_matches_reference_randomized(seed, stride, dilation, groups):
    rng = make_rng(seed)
    cpg_in, opg = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    cin, cout = groups * cpg_in, groups * opg
    kernel = int(rng.choice([1, 3])) if dilation == 1 else 3
    spec = ConvSpec.group(cin, cout, kernel, groups, stride=stride,
                          dilation=dilation)
    ext = int(rng.integers(kernel * dilation, 10))
    x = rng.standard_normal((1, cin, ext, ext))
    w = rng.standard_normal(spec.weight_shape)
    want = reference_conv2d(x, w, spec.stride, spec.dilation, spec.groups,
                            spec.padding)
    assert np.abs(conv_forward(spec, w, x) - want).max() <= 1e-12
