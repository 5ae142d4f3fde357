"""Recurrent cell whose input transforms are the efficient unit in 1D.

A standard LSTM spends 4H(E + H) + 4H parameters, most of them in the
dense input maps. Here the input vector is folded into a short
multi-channel sequence, passed through a channel-preserving 1D unit
(grouped reduce, dilated depthwise branches, hierarchical fusion,
grouped expansion, residual), and the four gate pre-activations come
from a grouped point-wise transform instead of a dense one. The
recurrent map stays dense. Gate order is input, forget, cell, output.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .eesp import hff_fuse
from .errors import ConfigError, ShapeError
from .layers import BatchNorm, Conv1d, Linear, PReLU
from .tensor import make_rng


@dataclass(frozen=True)
class EruConfig:
    embed_dim: int
    hidden_dim: int
    channels: int = 16
    branches: int = 4
    groups: int = 4
    dilation_rates: tuple = None

    def __post_init__(self):
        if self.embed_dim < 1 or self.hidden_dim < 1:
            raise ConfigError("embed_dim and hidden_dim must be >= 1")
        if self.channels < 1 or self.embed_dim % self.channels:
            raise ConfigError(
                f"channels ({self.channels}) must divide embed_dim "
                f"({self.embed_dim}) so the vector folds into a sequence")
        if self.branches < 1 or self.channels % self.branches:
            raise ConfigError(
                f"branches ({self.branches}) must divide channels ({self.channels})")
        d = self.channels // self.branches
        for label, c in (("channels", self.channels), ("branch width", d),
                         ("embed_dim", self.embed_dim),
                         ("gate width", 4 * self.hidden_dim)):
            if c % self.groups:
                raise ConfigError(
                    f"groups ({self.groups}) must divide {label} ({c})")
        rates = self.dilation_rates
        if rates is None:
            rates = tuple(range(1, self.branches + 1))
        rates = tuple(int(r) for r in rates)
        if len(rates) != self.branches or any(r < 1 for r in rates):
            raise ConfigError(
                f"need {self.branches} dilation rates >= 1, got {rates}")
        if any(b < a for a, b in zip(rates, rates[1:])):
            raise ConfigError(f"rates must be non-decreasing, got {rates}")
        object.__setattr__(self, "dilation_rates", rates)

    @property
    def branch_channels(self) -> int:
        return self.channels // self.branches

    @property
    def seq_len(self) -> int:
        return self.embed_dim // self.channels


class Eesp1dUnit:
    """Channel-preserving 1D analogue of the stride-1 unit."""

    def __init__(self, cfg: EruConfig, rng):
        c, d, g = cfg.channels, cfg.branch_channels, cfg.groups
        self.cfg = cfg
        self.reduce = Conv1d(c, d, 1, rng, groups=g)
        self.reduce_bn = BatchNorm(d)
        self.reduce_act = PReLU(d)
        self.branches = [Conv1d(d, d, 3, rng, dilation=r, groups=d)
                         for r in cfg.dilation_rates]
        self.branch_bns = [BatchNorm(d) for _ in self.branches]
        self.branch_acts = [PReLU(d) for _ in self.branches]
        self.project = Conv1d(c, c, 1, rng, groups=g)
        self.project_bn = BatchNorm(c)
        self.out_act = PReLU(c)

    def __call__(self, x, train=False):
        x = ag.as_var(x)
        if x.ndim != 3 or x.shape[1] != self.cfg.channels:
            raise ShapeError(
                f"expected [n, {self.cfg.channels}, t] input, got {x.shape}")
        r = self.reduce_act(self.reduce_bn(self.reduce(x), train))
        outs = [act(bn(conv(r), train))
                for conv, bn, act in zip(self.branches, self.branch_bns,
                                         self.branch_acts)]
        y = ag.concat_channels(hff_fuse(outs))
        y = self.project_bn(self.project(y), train)
        return self.out_act(ag.add(y, x))

    def parameters(self):
        out = (self.reduce.parameters() + self.reduce_bn.parameters()
               + self.reduce_act.parameters())
        for conv, bn, act in zip(self.branches, self.branch_bns, self.branch_acts):
            out += conv.parameters() + bn.parameters() + act.parameters()
        return (out + self.project.parameters() + self.project_bn.parameters()
                + self.out_act.parameters())


class EruCell:
    """LSTM-style cell with the grouped/fused input path."""

    def __init__(self, cfg: EruConfig, rng):
        if isinstance(rng, (int, np.integer)):
            rng = make_rng(int(rng))
        self.cfg = cfg
        self.unit = Eesp1dUnit(cfg, rng)
        # grouped point-wise gates on the length-1 layout; the bias lives
        # on the dense recurrent map so there is a single bias per gate
        self.gate_x = Conv1d(cfg.embed_dim, 4 * cfg.hidden_dim, 1, rng,
                             groups=cfg.groups)
        self.gate_h = Linear(cfg.hidden_dim, 4 * cfg.hidden_dim, rng, bias=True)

    def init_state(self, batch: int):
        h = np.zeros((batch, self.cfg.hidden_dim))
        return ag.as_var(h), ag.as_var(h.copy())

    def step(self, x_t, h, c, train=False):
        """One time step; returns (h_next, c_next) as ``Var``s."""
        x_t, h, c = ag.as_var(x_t), ag.as_var(h), ag.as_var(c)
        n, hd = x_t.shape[0], self.cfg.hidden_dim
        if x_t.ndim != 2 or x_t.shape[1] != self.cfg.embed_dim:
            raise ShapeError(
                f"expected [n, {self.cfg.embed_dim}] input, got {x_t.shape}")
        if h.shape != (n, hd) or c.shape != (n, hd):
            raise ShapeError(
                f"state must be [{n}, {hd}], got {h.shape} and {c.shape}")
        seq = ag.reshape(x_t, (n, self.cfg.channels, self.cfg.seq_len))
        flat = ag.reshape(self.unit(seq, train), (n, self.cfg.embed_dim))
        zx = ag.reshape(self.gate_x(ag.reshape(flat, (n, self.cfg.embed_dim, 1))),
                        (n, 4 * hd))
        z = ag.add(zx, self.gate_h(h))
        i = ag.sigmoid(ag.slice_channels(z, 0, hd))
        f = ag.sigmoid(ag.slice_channels(z, hd, 2 * hd))
        g = ag.tanh(ag.slice_channels(z, 2 * hd, 3 * hd))
        o = ag.sigmoid(ag.slice_channels(z, 3 * hd, 4 * hd))
        c_next = ag.add(ag.mul(f, c), ag.mul(i, g))
        h_next = ag.mul(o, ag.tanh(c_next))
        return h_next, c_next

    def unroll(self, xs, h=None, c=None, train=False):
        """Run a [t, n, embed_dim] sequence; returns (hs, (h, c)).

        The sequence is treated as a constant; call ``step`` directly
        when gradients with respect to the inputs are needed.
        """
        xs = xs.data if isinstance(xs, ag.Var) else np.asarray(xs)
        if xs.ndim != 3:
            raise ShapeError(f"expected [t, n, embed_dim] sequence, got {xs.shape}")
        if h is None or c is None:
            h, c = self.init_state(xs.shape[1])
        hs = []
        for t in range(xs.shape[0]):
            h, c = self.step(xs[t], h, c, train)
            hs.append(h)
        return hs, (h, c)

    def parameters(self):
        return (self.unit.parameters() + self.gate_x.parameters()
                + self.gate_h.parameters())


def eru_param_count(cfg: EruConfig) -> int:
    """Learnable scalars in the cell (batch-norm and slopes included)."""
    cell = EruCell(cfg, 0)
    return sum(p.data.size for p in cell.parameters())


def lstm_param_count(embed_dim: int, hidden_dim: int) -> int:
    """Dense LSTM with one bias per gate: 4H(E + H) + 4H."""
    return 4 * hidden_dim * (embed_dim + hidden_dim) + 4 * hidden_dim
