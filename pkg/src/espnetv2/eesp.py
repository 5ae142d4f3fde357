"""EESP building blocks: reduce, split, transform, fuse, merge.

A stride-1 unit maps M channels to M channels:

    grouped 1x1 reduce M -> d (+bn +prelu)
    K parallel depthwise 3x3 branches d -> d, dilation rates ascending
        (+bn +prelu each, before fusion)
    hierarchical feature fusion: prefix sums over the branch outputs
    concat of the K fused maps -> K*d
    grouped 1x1 projection K*d -> K*d (+bn)
    residual add of the input, then prelu

The ``eesp_a`` variant replaces the grouped projection with K
independent pointwise convolutions (identical when groups == K). The
``esp`` variant is the ablation baseline: ungrouped reduce, standard
dilated branch convolutions, and no projection.

The strided unit runs its branches at stride 2, replaces the residual
add with a concat of the projected branches and a 3x3/2 average-pooled
copy of the input (so channels grow M -> M + K*d), and adds a long-range
shortcut computed from the raw input image (repeated 3x3/2 average
pooling, a 3x3 conv on the image's 3 channels, then a pointwise
expansion). PReLU after the merge is applied once, after the final
add, matching the rule that the last group-wise convolution's
activation follows the element-wise sum.
"""

from dataclasses import dataclass, field

from . import autograd as ag
from .conv import ConvSpec, param_count
from .errors import ConfigError, ShapeError
from .layers import BatchNorm, Conv2d, ConvBnAct, PReLU

VARIANTS = ("eesp", "eesp_a", "esp")


def hff_fuse(branches):
    """Prefix-sum fusion of branch outputs ordered by ascending dilation.

    Returns the list of fused maps; element k is the sum of branches
    0..k. Works on plain arrays and autograd Vars alike.
    """
    branches = list(branches)
    if not branches:
        raise ShapeError("hff_fuse needs at least one branch")
    base = branches[0].shape
    for b in branches[1:]:
        if b.shape != base:
            raise ShapeError(f"branch shapes differ: {b.shape} vs {base}")
    fused = [branches[0]]
    for b in branches[1:]:
        fused.append(fused[-1] + b)
    return fused


@dataclass(frozen=True)
class EespConfig:
    in_channels: int
    out_channels: int
    branches: int = 4
    groups: int = 4
    kernel: int = 3
    stride: int = 1
    dilation_rates: tuple = None
    variant: str = "eesp"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.branches < 1:
            raise ConfigError("branches must be >= 1")
        if self.kernel < 3 or self.kernel % 2 == 0:
            raise ConfigError(f"branch kernel must be odd and >= 3, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")
        if self.stride == 1 and self.in_channels != self.out_channels:
            raise ConfigError(
                "stride-1 unit must preserve channels for the residual add, "
                f"got in={self.in_channels} out={self.out_channels}"
            )
        if self.stride == 2:
            if self.out_channels <= self.in_channels:
                raise ConfigError(
                    "strided unit must grow channels, "
                    f"got in={self.in_channels} out={self.out_channels}"
                )
            if (self.out_channels - self.in_channels) % self.branches:
                raise ConfigError(
                    f"(out_channels - in_channels) = "
                    f"{self.out_channels - self.in_channels} must be divisible by "
                    f"branches = {self.branches}"
                )
        d = self.branch_channels
        if d < 1:
            raise ConfigError("branch width is zero; out_channels too small for branches")
        if self.variant != "esp":
            if self.groups < 1 or self.in_channels % self.groups or d % self.groups:
                raise ConfigError(
                    f"groups={self.groups} must divide in_channels={self.in_channels} "
                    f"and branch width d={d}"
                )
            if (self.branches * d) % self.groups:
                raise ConfigError(
                    f"groups={self.groups} must divide the projection width "
                    f"K*d={self.branches * d}"
                )
        rates = self.dilation_rates
        if rates is None:
            rates = tuple(range(1, self.branches + 1))
            object.__setattr__(self, "dilation_rates", rates)
        if len(rates) != self.branches:
            raise ConfigError(
                f"need {self.branches} dilation rates, got {len(rates)}"
            )
        if any(r < 1 for r in rates):
            raise ConfigError(f"dilation rates must be >= 1, got {rates}")
        if any(b < a for a, b in zip(rates, rates[1:])):
            raise ConfigError(
                f"dilation rates must be non-decreasing for fusion, got {rates}"
            )

    @property
    def branch_channels(self) -> int:
        if self.stride == 1:
            return self.out_channels // self.branches
        return (self.out_channels - self.in_channels) // self.branches


def unit_conv_specs(cfg: EespConfig):
    """Ordered (name, ConvSpec) pairs for the unit's convolutions,
    excluding any long-range shortcut."""
    d = cfg.branch_channels
    k, K = cfg.kernel, cfg.branches
    reduce_groups = 1 if cfg.variant == "esp" else cfg.groups
    specs = [("reduce", ConvSpec.group(cfg.in_channels, d, 1, reduce_groups))]
    for i, r in enumerate(cfg.dilation_rates, start=1):
        if cfg.variant == "esp":
            spec = ConvSpec.standard(d, d, k, stride=cfg.stride, dilation=r)
        else:
            spec = ConvSpec.depthwise(d, k, stride=cfg.stride, dilation=r)
        specs.append((f"branch{i}", spec))
    if cfg.variant == "eesp":
        specs.append(("project", ConvSpec.group(K * d, K * d, 1, cfg.groups)))
    elif cfg.variant == "eesp_a":
        for i in range(1, K + 1):
            specs.append((f"project{i}", ConvSpec.standard(d, d, 1)))
    return specs


def eesp_param_count(cfg: EespConfig) -> int:
    """Convolution weights only, matching the unit cost ledger."""
    return sum(param_count(s) for _, s in unit_conv_specs(cfg))


def esp_vs_eesp_param_ratio(in_channels: int, branch_width: int,
                            branches: int, groups: int, kernel: int = 3) -> float:
    """Closed-form parameter ratio between the esp baseline
    (M*d + k^2*d^2*K) and the eesp unit (M*d/g + (k^2 + d)*d*K)."""
    m, d, K, g, k2 = in_channels, branch_width, branches, groups, kernel * kernel
    esp = m * d + k2 * d * d * K
    eesp = m * d / g + (k2 + d) * d * K
    return esp / eesp


class EespUnit:
    """Stride-1 unit; channels are preserved and the input is added back."""

    def __init__(self, cfg: EespConfig, rng):
        if cfg.stride != 1:
            raise ConfigError("EespUnit is stride-1; use StridedEesp for stride 2")
        self.cfg = cfg
        d = cfg.branch_channels
        specs = dict(unit_conv_specs(cfg))
        self.reduce = ConvBnAct(specs["reduce"], rng)
        self.branches = [Conv2d(specs[f"branch{i}"], rng)
                         for i in range(1, cfg.branches + 1)]
        self.branch_bns = [BatchNorm(d) for _ in range(cfg.branches)]
        self.branch_acts = [PReLU(d) for _ in range(cfg.branches)]
        if cfg.variant == "eesp":
            self.project = Conv2d(specs["project"], rng)
        elif cfg.variant == "eesp_a":
            self.project = [Conv2d(specs[f"project{i}"], rng)
                            for i in range(1, cfg.branches + 1)]
        else:
            self.project = None
        if cfg.variant != "esp":
            self.project_bn = BatchNorm(cfg.out_channels)
        else:
            self.project_bn = None
        self.out_act = PReLU(cfg.out_channels)

    def _transform(self, x, train):
        """reduce -> branches -> fuse; returns the merged (pre-residual) map."""
        red = self.reduce(x, train)
        outs = []
        for conv, bn, act in zip(self.branches, self.branch_bns, self.branch_acts):
            outs.append(act(bn(conv(red), train)))
        fused = hff_fuse(outs)
        if self.cfg.variant == "eesp":
            merged = self.project_bn(self.project(ag.concat_channels(fused)), train)
        elif self.cfg.variant == "eesp_a":
            merged = ag.concat_channels([p(f) for p, f in zip(self.project, fused)])
            merged = self.project_bn(merged, train)
        else:
            merged = ag.concat_channels(fused)
        return merged

    def __call__(self, x, train=False):
        x = ag.as_var(x)
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ShapeError(
                f"expected [n, {self.cfg.in_channels}, h, w], got {x.shape}"
            )
        return self.out_act(self._transform(x, train) + x)

    def parameters(self):
        out = self.reduce.parameters()
        for conv, bn, act in zip(self.branches, self.branch_bns, self.branch_acts):
            out += conv.parameters() + bn.parameters() + act.parameters()
        if self.cfg.variant == "eesp":
            out += self.project.parameters()
        elif self.cfg.variant == "eesp_a":
            for p in self.project:
                out += p.parameters()
        if self.project_bn is not None:
            out += self.project_bn.parameters()
        return out + self.out_act.parameters()


class StridedEesp:
    """Stride-2 unit: strided branches, pooled-identity concat, and an
    optional long-range shortcut from the raw input image."""

    def __init__(self, cfg: EespConfig, rng, shortcut=True, image_channels=3):
        if cfg.stride != 2:
            raise ConfigError("StridedEesp needs a stride-2 config")
        self.cfg = cfg
        d = cfg.branch_channels
        specs = dict(unit_conv_specs(cfg))
        self.reduce = ConvBnAct(specs["reduce"], rng)
        self.branches = [Conv2d(specs[f"branch{i}"], rng)
                         for i in range(1, cfg.branches + 1)]
        self.branch_bns = [BatchNorm(d) for _ in range(cfg.branches)]
        self.branch_acts = [PReLU(d) for _ in range(cfg.branches)]
        kd = cfg.branches * d
        if cfg.variant == "eesp":
            self.project = Conv2d(specs["project"], rng)
            self.project_bn = BatchNorm(kd)
        elif cfg.variant == "eesp_a":
            self.project = [Conv2d(specs[f"project{i}"], rng)
                            for i in range(1, cfg.branches + 1)]
            self.project_bn = BatchNorm(kd)
        else:
            self.project = None
            self.project_bn = None
        self.shortcut = None
        if shortcut:
            self.shortcut = [
                ConvBnAct(ConvSpec.standard(image_channels, image_channels, 3), rng),
                ConvBnAct(ConvSpec.standard(image_channels, cfg.out_channels, 1),
                          rng, act=False),
            ]
        self.out_act = PReLU(cfg.out_channels)

    def _shortcut_path(self, image, target_extent, train):
        s = ag.as_var(image)
        while s.shape[2] > target_extent:
            s = ag.avg_pool_3x3_s2(s)
        if s.shape[2] != target_extent:
            raise ShapeError(
                f"image extent {image.shape[2]} cannot be pooled to {target_extent}"
            )
        s = self.shortcut[0](s, train)
        return self.shortcut[1](s, train)

    def __call__(self, x, image=None, train=False):
        x = ag.as_var(x)
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ShapeError(
                f"expected [n, {self.cfg.in_channels}, h, w], got {x.shape}"
            )
        red = self.reduce(x, train)
        outs = []
        for conv, bn, act in zip(self.branches, self.branch_bns, self.branch_acts):
            outs.append(act(bn(conv(red), train)))
        fused = hff_fuse(outs)
        if self.cfg.variant == "eesp":
            merged = self.project_bn(self.project(ag.concat_channels(fused)), train)
        elif self.cfg.variant == "eesp_a":
            merged = ag.concat_channels([p(f) for p, f in zip(self.project, fused)])
            merged = self.project_bn(merged, train)
        else:
            merged = ag.concat_channels(fused)
        pooled = ag.avg_pool_3x3_s2(x)
        y = ag.concat_channels([merged, pooled])
        if self.shortcut is not None:
            if image is None:
                raise ShapeError("strided unit with a shortcut needs the input image")
            y = y + self._shortcut_path(image, y.shape[2], train)
        return self.out_act(y)

    def parameters(self):
        out = self.reduce.parameters()
        for conv, bn, act in zip(self.branches, self.branch_bns, self.branch_acts):
            out += conv.parameters() + bn.parameters() + act.parameters()
        if self.cfg.variant == "eesp":
            out += self.project.parameters()
        elif self.cfg.variant == "eesp_a":
            for p in self.project:
                out += p.parameters()
        if self.project_bn is not None:
            out += self.project_bn.parameters()
        if self.shortcut is not None:
            for stage in self.shortcut:
                out += stage.parameters()
        return out + self.out_act.parameters()
