"""Convolution variants and their analytical costs.

Five atomic kinds are modeled: standard, group, depthwise,
depthwise_dilated, and pointwise. A depth-wise (dilated) separable
convolution is the composition of a depthwise stage and a pointwise
stage; helpers cost the pair directly. Weight layout is
[out_channels, in_channels // groups, k, k]; inputs are
[batch, channels, height, width] float64.

Parameter counts follow the usual ledger: standard k^2*c*c_out, group
k^2*c*c_out/g, depthwise k^2*c. Dilation never changes parameter or MAC
counts, only the effective receptive field (k-1)*r + 1. MACs are counted
per image as weight_count * out_h * out_w.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError, ShapeError

KINDS = ("standard", "group", "depthwise", "depthwise_dilated", "pointwise")


@dataclass(frozen=True)
class ConvSpec:
    kind: str
    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    padding: int = -1  # -1 means "same": dilation * (kernel - 1) // 2
    bias: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError("channel counts must be positive")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError(f"kernel must be odd and positive, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")
        if self.dilation < 1:
            raise ConfigError(f"dilation must be >= 1, got {self.dilation}")
        if self.groups < 1 or self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigError(
                f"groups={self.groups} must divide in_channels={self.in_channels} "
                f"and out_channels={self.out_channels}"
            )
        if self.kind == "standard" and self.groups != 1:
            raise ConfigError("standard convolution requires groups == 1")
        if self.kind == "pointwise":
            if self.kernel != 1:
                raise ConfigError("pointwise convolution requires kernel == 1")
            if self.groups != 1:
                raise ConfigError("pointwise kind is ungrouped; use kind='group' with kernel 1")
        if self.kind in ("depthwise", "depthwise_dilated"):
            if self.groups != self.in_channels or self.out_channels != self.in_channels:
                raise ConfigError(
                    "depthwise convolution requires groups == in_channels == out_channels"
                )
        if self.kind == "depthwise" and self.dilation != 1:
            raise ConfigError("use kind='depthwise_dilated' for dilation > 1")
        if self.padding == -1:
            object.__setattr__(self, "padding", self.dilation * (self.kernel - 1) // 2)
        if self.padding < 0:
            raise ConfigError(f"padding must be >= 0, got {self.padding}")

    @classmethod
    def standard(cls, cin, cout, kernel, stride=1, dilation=1):
        kind = "pointwise" if kernel == 1 and dilation == 1 else "standard"
        return cls(kind, cin, cout, kernel, stride=stride, dilation=dilation)

    @classmethod
    def group(cls, cin, cout, kernel, groups, stride=1, dilation=1):
        if groups == 1:
            return cls.standard(cin, cout, kernel, stride=stride, dilation=dilation)
        return cls("group", cin, cout, kernel, stride=stride, dilation=dilation, groups=groups)

    @classmethod
    def depthwise(cls, channels, kernel, stride=1, dilation=1):
        kind = "depthwise" if dilation == 1 else "depthwise_dilated"
        return cls(kind, channels, channels, kernel, stride=stride,
                   dilation=dilation, groups=channels)

    @property
    def weight_shape(self):
        return (self.out_channels, self.in_channels // self.groups, self.kernel, self.kernel)

    @property
    def fan_in(self):
        return (self.in_channels // self.groups) * self.kernel * self.kernel


def param_count(spec: ConvSpec) -> int:
    n = int(np.prod(spec.weight_shape))
    return n + (spec.out_channels if spec.bias else 0)


def mac_count(spec: ConvSpec, out_h: int, out_w: int) -> int:
    """Multiply-accumulates per image; biases and activations excluded."""
    return int(np.prod(spec.weight_shape)) * out_h * out_w


def separable_param_count(channels: int, out_channels: int, kernel: int = 3) -> int:
    """Depthwise stage + pointwise stage: k^2*c + c*c_out (dilation-free)."""
    return kernel * kernel * channels + channels * out_channels


def separable_mac_count(channels, out_channels, kernel, out_h, out_w,
                        mid_h=None, mid_w=None) -> int:
    """MACs of the separable pair; the depthwise stage may run at a
    different (pre-pointwise) extent when strided."""
    if mid_h is None:
        mid_h, mid_w = out_h, out_w
    return (kernel * kernel * channels * mid_h * mid_w
            + channels * out_channels * out_h * out_w)


def cost_reduction_separable(kernel: int, channels: int, out_channels: int) -> float:
    """Standard-vs-separable cost factor k^2*c*c_out / (k^2*c + c*c_out)."""
    return (kernel * kernel * channels * out_channels) / separable_param_count(
        channels, out_channels, kernel)


def effective_receptive_field(kernel: int, dilation: int) -> int:
    if kernel < 1 or kernel % 2 == 0 or dilation < 1:
        raise ConfigError(f"need odd kernel >= 1 and dilation >= 1, got {kernel}, {dilation}")
    return (kernel - 1) * dilation + 1


def out_extent(size: int, kernel: int, stride: int, dilation: int, padding: int) -> int:
    span = dilation * (kernel - 1) + 1
    out = (size + 2 * padding - span) // stride + 1
    if out < 1:
        raise ShapeError(
            f"extent {size} too small for kernel {kernel} dilation {dilation} "
            f"stride {stride} padding {padding}"
        )
    return out


def _check_forward_shapes(spec, weight, x):
    if x.ndim != 4:
        raise ShapeError(f"input must be [batch, channels, h, w], got {x.shape}")
    if x.shape[1] != spec.in_channels:
        raise ShapeError(f"input has {x.shape[1]} channels, spec wants {spec.in_channels}")
    if weight.shape != spec.weight_shape:
        raise ShapeError(f"weight shape {weight.shape} != spec shape {spec.weight_shape}")


def conv_forward(spec: ConvSpec, weight: np.ndarray, x: np.ndarray,
                 bias: np.ndarray = None) -> np.ndarray:
    _check_forward_shapes(spec, weight, x)
    out_extent(x.shape[2], spec.kernel, spec.stride, spec.dilation, spec.padding)
    out_extent(x.shape[3], spec.kernel, spec.stride, spec.dilation, spec.padding)
    y = backend.conv2d_forward(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(weight, dtype=np.float64),
        spec.stride, spec.dilation, spec.groups, spec.padding)
    if bias is not None:
        if bias.shape != (spec.out_channels,):
            raise ShapeError(f"bias must have shape ({spec.out_channels},), got {bias.shape}")
        y = y + bias[None, :, None, None]
    return y


def conv_backward(spec: ConvSpec, weight: np.ndarray, x: np.ndarray,
                  grad_out: np.ndarray):
    """Gradients of sum(grad_out * conv(x)) w.r.t. x, weight, and bias.

    Returns (grad_x, grad_weight, grad_bias); grad_bias is None for
    bias-free specs.
    """
    _check_forward_shapes(spec, weight, x)
    oh = out_extent(x.shape[2], spec.kernel, spec.stride, spec.dilation, spec.padding)
    ow = out_extent(x.shape[3], spec.kernel, spec.stride, spec.dilation, spec.padding)
    if grad_out.shape != (x.shape[0], spec.out_channels, oh, ow):
        raise ShapeError(
            f"grad_out shape {grad_out.shape} != "
            f"{(x.shape[0], spec.out_channels, oh, ow)}"
        )
    g = np.ascontiguousarray(grad_out, dtype=np.float64)
    xx = np.ascontiguousarray(x, dtype=np.float64)
    ww = np.ascontiguousarray(weight, dtype=np.float64)
    gx = backend.conv2d_grad_input(
        g, ww, spec.in_channels, x.shape[2], x.shape[3],
        spec.stride, spec.dilation, spec.groups, spec.padding)
    gw = backend.conv2d_grad_weight(
        xx, g, spec.kernel, spec.kernel,
        spec.stride, spec.dilation, spec.groups, spec.padding)
    gb = g.sum(axis=(0, 2, 3)) if spec.bias else None
    return gx, gw, gb


def avg_pool_3x3_s2(x: np.ndarray) -> np.ndarray:
    """3x3 stride-2 average pooling, same padding, dividing by 9.

    Implemented as a depthwise convolution with a constant kernel so both
    kernel backends serve it.
    """
    if x.ndim != 4:
        raise ShapeError(f"expected [batch, channels, h, w], got {x.shape}")
    c = x.shape[1]
    kern = np.full((c, 1, 3, 3), 1.0 / 9.0)
    return backend.conv2d_forward(
        np.ascontiguousarray(x, dtype=np.float64), kern, 2, 1, c, 1)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    if x.ndim != 4:
        raise ShapeError(f"expected [batch, channels, h, w], got {x.shape}")
    return x.mean(axis=(2, 3))
