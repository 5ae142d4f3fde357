import numpy as np
import pytest

from espnetv2 import autograd as ag
from espnetv2.errors import ConfigError, ShapeError
from espnetv2.eru import (EruCell, EruConfig, Eesp1dUnit, eru_param_count,
                          lstm_param_count)
from espnetv2.tensor import make_rng, prelu
from oracles import manual_lstm_gates


CFG = EruConfig(64, 64, channels=16, branches=4, groups=4)


def test_config_validation():
    with pytest.raises(ConfigError):
        EruConfig(60, 32, channels=16)  # channels must divide embed_dim
    with pytest.raises(ConfigError):
        EruConfig(64, 32, channels=18, branches=4)  # branches must divide
    with pytest.raises(ConfigError):
        EruConfig(64, 32, channels=16, branches=4, groups=3)
    with pytest.raises(ConfigError):
        # 4*33 = 132 is not divisible by 8; every other constraint holds
        EruConfig(64, 33, channels=32, groups=8)
    with pytest.raises(ConfigError):
        EruConfig(64, 64, channels=16, dilation_rates=(1, 2))
    with pytest.raises(ConfigError):
        EruConfig(0, 4)


def test_config_derived_sizes():
    assert CFG.branch_channels == 4
    assert CFG.seq_len == 4
    assert CFG.dilation_rates == (1, 2, 3, 4)


def test_unit_preserves_shape_and_residual(rng):
    unit = Eesp1dUnit(CFG, make_rng(1))
    x = rng.standard_normal((3, 16, 4))
    y = unit(x)
    assert y.data.shape == (3, 16, 4) and np.isfinite(y.data).all()
    unit.project_bn.gamma.data[:] = 0.0  # transform collapses to beta == 0
    assert np.allclose(unit(x).data, prelu(x, np.full(16, 0.25)), atol=1e-13)
    with pytest.raises(ShapeError):
        unit(rng.standard_normal((3, 8, 4)))


def test_step_shapes_and_errors(rng):
    cell = EruCell(CFG, 2)
    h, c = cell.init_state(5)
    assert h.shape == c.shape == (5, 64)
    h2, c2 = cell.step(rng.standard_normal((5, 64)), h, c)
    assert h2.shape == c2.shape == (5, 64)
    assert np.isfinite(h2.data).all()
    assert np.abs(h2.data).max() <= 1.0  # tanh-bounded output
    with pytest.raises(ShapeError):
        cell.step(rng.standard_normal((5, 32)), h, c)
    with pytest.raises(ShapeError):
        cell.step(rng.standard_normal((5, 64)), h, ag.as_var(np.zeros((5, 32))))


def test_step_matches_manual_gating(rng):
    # reuse the cell's sublayers to form the pre-activations, then apply
    # the gate equations with independent numpy math
    cell = EruCell(CFG, 3)
    x = rng.standard_normal((4, 64))
    h0 = rng.standard_normal((4, 64)) * 0.1
    c0 = rng.standard_normal((4, 64)) * 0.1
    h1, c1 = cell.step(x, h0, c0)

    seq = ag.reshape(ag.as_var(x), (4, 16, 4))
    flat = ag.reshape(cell.unit(seq), (4, 64))
    zx = ag.reshape(cell.gate_x(ag.reshape(flat, (4, 64, 1))), (4, 256))
    z = zx.data + cell.gate_h(ag.as_var(h0)).data
    want_h, want_c = manual_lstm_gates(z, c0)
    assert np.abs(h1.data - want_h).max() <= 1e-12
    assert np.abs(c1.data - want_c).max() <= 1e-12


def test_unroll_chains_steps(rng):
    cell = EruCell(CFG, 4)
    xs = rng.standard_normal((3, 2, 64))
    hs, (h, c) = cell.unroll(xs)
    assert len(hs) == 3 and hs[-1] is h
    h_manual, c_manual = cell.init_state(2)
    for t in range(3):
        h_manual, c_manual = cell.step(xs[t], h_manual, c_manual)
    assert np.allclose(h.data, h_manual.data, atol=1e-13)
    assert np.allclose(c.data, c_manual.data, atol=1e-13)
    with pytest.raises(ShapeError):
        cell.unroll(rng.standard_normal((3, 64)))


def test_gradients_reach_all_parameters(rng):
    cell = EruCell(CFG, 5)
    params = cell.parameters()
    hs, _ = cell.unroll(rng.standard_normal((2, 2, 64)), train=True)
    ag.zero_grads(params)
    hs[-1].backward(np.ones_like(hs[-1].data))
    missing = [i for i, p in enumerate(params) if p.grad is None]
    assert missing == []


def test_parameter_budget():
    # unit 236 (convs 16+48+64, norms 72, slopes 36)
    # + grouped input gates 64*256/4 = 4096
    # + dense recurrent gates 64*256 + 256 = 16640
    assert eru_param_count(CFG) == 236 + 4096 + 16640
    assert lstm_param_count(64, 64) == 4 * 64 * (64 + 64) + 4 * 64
    assert eru_param_count(CFG) < lstm_param_count(64, 64)
    # the saving comes from grouping the input transforms
    dense_gate_x = 64 * 256
    grouped_gate_x = 64 * 256 // 4
    assert dense_gate_x - grouped_gate_x == 12288
