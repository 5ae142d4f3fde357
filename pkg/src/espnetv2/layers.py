"""Parametered layers shared by the building blocks.

Each layer owns its weights as autograd ``Var`` objects, exposes
``parameters()`` for the optimizer, and is callable on a ``Var``.
Batch-norm running statistics live on the layer and are refreshed in
train mode.
"""

import numpy as np

from . import autograd as ag
from .conv import ConvSpec
from .tensor import he_init


class Conv2d:
    def __init__(self, spec: ConvSpec, rng):
        self.spec = spec
        self.weight = ag.param(he_init(spec.fan_in, spec.weight_shape, rng))

    def __call__(self, x):
        s = self.spec
        return ag.conv2d(x, self.weight, s.stride, s.dilation, s.groups, s.padding)

    def parameters(self):
        return [self.weight]


class Conv1d:
    """1D counterpart; spec fields are reused with square-kernel cost
    semantics ignored (weight shape [out, in/groups, k])."""

    def __init__(self, in_channels, out_channels, kernel, rng,
                 stride=1, dilation=1, groups=1):
        if in_channels % groups or out_channels % groups:
            raise ValueError("groups must divide both channel counts")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.dilation = dilation
        self.groups = groups
        self.padding = dilation * (kernel - 1) // 2
        fan_in = (in_channels // groups) * kernel
        self.weight = ag.param(
            he_init(fan_in, (out_channels, in_channels // groups, kernel), rng))

    def __call__(self, x):
        return ag.conv1d(x, self.weight, self.stride, self.dilation,
                         self.groups, self.padding)

    def parameters(self):
        return [self.weight]


class BatchNorm:
    def __init__(self, channels, momentum=0.1, eps=1e-5):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = ag.param(np.ones(channels))
        self.beta = ag.param(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def __call__(self, x, train=False):
        y, self.running_mean, self.running_var = ag.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            train, self.momentum, self.eps)
        return y

    def parameters(self):
        return [self.gamma, self.beta]


class PReLU:
    def __init__(self, channels, init=0.25):
        self.slopes = ag.param(np.full(channels, float(init)))

    def __call__(self, x):
        return ag.prelu(x, self.slopes)

    def parameters(self):
        return [self.slopes]


class Linear:
    def __init__(self, in_features, out_features, rng, bias=True):
        self.weight = ag.param(he_init(in_features, (in_features, out_features), rng))
        self.bias = ag.param(np.zeros(out_features)) if bias else None

    def __call__(self, x):
        return ag.linear(x, self.weight, self.bias)

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class ConvBnAct:
    """conv -> batch norm -> optional PReLU, the block-internal idiom."""

    def __init__(self, spec: ConvSpec, rng, act=True):
        self.conv = Conv2d(spec, rng)
        self.bn = BatchNorm(spec.out_channels)
        self.act = PReLU(spec.out_channels) if act else None

    def __call__(self, x, train=False):
        y = self.bn(self.conv(x), train)
        return self.act(y) if self.act is not None else y

    def parameters(self):
        out = self.conv.parameters() + self.bn.parameters()
        if self.act is not None:
            out += self.act.parameters()
        return out
