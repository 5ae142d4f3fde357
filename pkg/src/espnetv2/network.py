"""The six-profile network family.

Layout: 3x3/2 stem, four stages each opened by a strided unit (channels
double, extent halves) followed by 0/3/7/3 stride-1 units, a 3x3
depthwise + grouped 1x1 head, global average pooling, and a
fully-connected classifier. Dilation rates per stage are 1..K clamped so
branch receptive fields stay within the level cap 5 + extent // 7 (with
the 7x7 level capped at 5 outright).

Profiles are named by their reference MAC budget at 224x224 (c28 ...
c284). Inputs smaller than 224 keep the same block sequence; extents
must stay divisible by 32 (five halvings), and levels below 7x7 reuse
the lowest-level cap.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .conv import ConvSpec, mac_count, out_extent, param_count
from .eesp import EespConfig, EespUnit, StridedEesp, unit_conv_specs
from .errors import ConfigError, ShapeError
from .layers import ConvBnAct, Linear
from .tensor import make_rng


def receptive_cap(extent: int) -> int:
    """Largest allowed effective receptive field at a spatial level."""
    if extent < 7:
        raise ConfigError(f"no cap is defined below the 7x7 level, got {extent}")
    if extent == 7:
        return 5  # the formula gives 6 here; the lowest level caps at 5
    return 5 + extent // 7


def rates_for_level(extent: int, branches: int, kernel: int = 3):
    """Dilation rates 1..K clamped to the level's receptive-field cap."""
    cap = receptive_cap(max(extent, 7))
    rmax = max(1, (cap - 1) // (kernel - 1))
    return tuple(min(k, rmax) for k in range(1, branches + 1))


@dataclass(frozen=True)
class NetworkProfile:
    name: str
    stem_channels: int
    stage_channels: tuple
    head_channels: int
    stage_repeats: tuple = (0, 3, 7, 3)
    num_classes: int = 1000
    branches: int = 4
    groups: int = 4


PROFILES = {
    "c28": NetworkProfile("c28", 16, (32, 64, 128, 256), 1024),
    "c86": NetworkProfile("c86", 32, (64, 128, 256, 512), 1024),
    "c123": NetworkProfile("c123", 32, (80, 160, 320, 640), 1024),
    "c169": NetworkProfile("c169", 32, (96, 192, 384, 768), 1024),
    "c224": NetworkProfile("c224", 32, (112, 224, 448, 896), 1280),
    "c284": NetworkProfile("c284", 32, (128, 256, 512, 1024), 1280),
}

UNIT_STYLES = ("eesp", "eesp_plain", "esp")


def get_profile(name) -> NetworkProfile:
    if isinstance(name, NetworkProfile):
        return name
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(
            f"unknown profile {name!r}; choose from {sorted(PROFILES)}"
        ) from None


class EspNetv2:
    def __init__(self, profile, rng, input_extent: int = 224,
                 unit_style: str = "eesp", long_range_shortcut: bool = True):
        if unit_style not in UNIT_STYLES:
            raise ConfigError(f"unit_style must be one of {UNIT_STYLES}")
        if input_extent % 32 or input_extent < 32:
            raise ConfigError(
                f"input extent must be a positive multiple of 32, got {input_extent}"
            )
        if isinstance(rng, (int, np.integer)):
            rng = make_rng(int(rng))
        self.profile = get_profile(profile)
        self.input_extent = input_extent
        self.unit_style = unit_style
        self.long_range_shortcut = long_range_shortcut
        p = self.profile
        variant = "esp" if unit_style == "esp" else "eesp"

        self.stem = ConvBnAct(ConvSpec.standard(3, p.stem_channels, 3, stride=2), rng)
        e = out_extent(input_extent, 3, 2, 1, 1)
        c = p.stem_channels
        self.stages = []
        self._unit_levels = []  # (unit, in_extent, out_extent) in forward order
        for cout, reps in zip(p.stage_channels, p.stage_repeats):
            e_out = out_extent(e, 3, 2, 1, 1)
            if unit_style == "eesp_plain":
                rates = (1,) * p.branches
            else:
                rates = rates_for_level(e_out, p.branches)
            stage = [StridedEesp(
                EespConfig(c, cout, p.branches, p.groups, 3, 2, rates, variant),
                rng, shortcut=long_range_shortcut)]
            self._unit_levels.append((stage[0], e, e_out))
            for _ in range(reps):
                unit = EespUnit(
                    EespConfig(cout, cout, p.branches, p.groups, 3, 1, rates, variant),
                    rng)
                stage.append(unit)
                self._unit_levels.append((unit, e_out, e_out))
            self.stages.append(stage)
            e, c = e_out, cout
        self.final_extent = e
        self.head_dw = ConvBnAct(ConvSpec.depthwise(c, 3), rng)
        self.head_pw = ConvBnAct(ConvSpec.group(c, p.head_channels, 1, p.groups), rng)
        self.classifier = Linear(p.head_channels, p.num_classes, rng, bias=True)

    def forward_var(self, x, train=False):
        x = ag.as_var(x)
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected [n, 3, e, e] input, got {x.shape}")
        if x.shape[2] != self.input_extent or x.shape[3] != self.input_extent:
            raise ShapeError(
                f"network was built for {self.input_extent}x{self.input_extent} "
                f"inputs, got {x.shape[2]}x{x.shape[3]}"
            )
        image = x
        y = self.stem(x, train)
        for stage in self.stages:
            for unit in stage:
                if isinstance(unit, StridedEesp):
                    y = unit(y, image, train)
                else:
                    y = unit(y, train)
        y = self.head_dw(y, train)
        y = self.head_pw(y, train)
        y = ag.global_avg_pool(y)
        return self.classifier(y)

    def forward(self, x, train=False) -> np.ndarray:
        """Logits [n, num_classes] for an [n, 3, e, e] array."""
        return self.forward_var(ag.as_var(np.asarray(x, dtype=np.float64)), train).data

    __call__ = forward

    def parameters(self):
        out = self.stem.parameters()
        for stage in self.stages:
            for unit in stage:
                out += unit.parameters()
        out += self.head_dw.parameters() + self.head_pw.parameters()
        return out + self.classifier.parameters()

    def param_total(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def units(self):
        """(unit, in_extent, out_extent) triples in forward order."""
        return list(self._unit_levels)

    # ---- analytical ledger ---------------------------------------------

    def cost_entries(self, input_extent: int = None):
        """Ordered per-layer ledger rows; pure integer arithmetic.

        Extents may be overridden to cost the same structure at another
        resolution (dilation rates are whatever the network was built
        with).
        """
        e_in = self.input_extent if input_extent is None else input_extent
        if e_in % 32 or e_in < 32:
            raise ConfigError(f"extent must be a positive multiple of 32, got {e_in}")
        p = self.profile
        rows = []
        e = out_extent(e_in, 3, 2, 1, 1)
        rows += _conv_bn_act_rows("stem", self.stem.conv.spec, e, act=True)
        for si, stage in enumerate(self.stages, start=1):
            e_out = out_extent(e, 3, 2, 1, 1)
            for ui, unit in enumerate(stage, start=1):
                prefix = f"stage{si}.unit{ui}"
                if isinstance(unit, StridedEesp):
                    rows += _unit_rows(prefix, unit, e, e_out)
                else:
                    rows += _unit_rows(prefix, unit, e_out, e_out)
            e = e_out
        rows += _conv_bn_act_rows("head.depthwise", self.head_dw.conv.spec, e, act=True)
        rows += _conv_bn_act_rows("head.expand", self.head_pw.conv.spec, e, act=True)
        rows.append(_row("head.pool", "global_pool", p.head_channels,
                         p.head_channels, 1, 0, 0))
        fc_in, fc_out = p.head_channels, p.num_classes
        rows.append(_row("classifier", "fc", fc_in, fc_out, 1,
                         fc_in * fc_out + fc_out, fc_in * fc_out,
                         bias_macs=fc_out))
        return rows

    def describe(self, input_extent: int = None):
        """JSON-ready layer records."""
        return self.cost_entries(input_extent)


def build_network(profile, rng=0, input_extent: int = 224,
                  unit_style: str = "eesp", long_range_shortcut: bool = True) -> EspNetv2:
    return EspNetv2(profile, rng, input_extent, unit_style, long_range_shortcut)


def _row(name, kind, cin, cout, ext, params, macs, kernel=0, stride=1,
         dilation=1, groups=1, bias_macs=0):
    return {
        "name": name, "kind": kind, "in_channels": cin, "out_channels": cout,
        "kernel": kernel, "stride": stride, "dilation": dilation,
        "groups": groups, "out_extent": ext, "params": params, "macs": macs,
        "bias_macs": bias_macs,
    }


def _conv_rows(name, spec: ConvSpec, ext):
    return [_row(name, "conv", spec.in_channels, spec.out_channels, ext,
                 param_count(spec), mac_count(spec, ext, ext),
                 kernel=spec.kernel, stride=spec.stride,
                 dilation=spec.dilation, groups=spec.groups)]


def _conv_bn_act_rows(name, spec: ConvSpec, ext, act: bool):
    rows = _conv_rows(name, spec, ext)
    c = spec.out_channels
    rows.append(_row(f"{name}.bn", "batch_norm", c, c, ext, 2 * c, 0))
    if act:
        rows.append(_row(f"{name}.act", "prelu", c, c, ext, c, 0))
    return rows


def _unit_rows(prefix, unit, e_in, e_out):
    cfg = unit.cfg
    d = cfg.branch_channels
    kd = cfg.branches * d
    specs = dict(unit_conv_specs(cfg))
    rows = []
    for name in ["reduce"] + [f"branch{i}" for i in range(1, cfg.branches + 1)]:
        ext = e_in if name == "reduce" else e_out
        rows += _conv_bn_act_rows(f"{prefix}.{name}", specs[name], ext, act=True)
    if cfg.variant == "eesp":
        rows += _conv_rows(f"{prefix}.project", specs["project"], e_out)
        rows.append(_row(f"{prefix}.project.bn", "batch_norm", kd, kd, e_out,
                         2 * kd, 0))
    elif cfg.variant == "eesp_a":
        for i in range(1, cfg.branches + 1):
            rows += _conv_rows(f"{prefix}.project{i}", specs[f"project{i}"], e_out)
        rows.append(_row(f"{prefix}.project.bn", "batch_norm", kd, kd, e_out,
                         2 * kd, 0))
    if cfg.stride == 2:
        rows.append(_row(f"{prefix}.pool", "avg_pool", cfg.in_channels,
                         cfg.in_channels, e_out, 0, 0, kernel=3, stride=2))
        if getattr(unit, "shortcut", None) is not None:
            for stage_name, stage in zip(("shortcut.conv3", "shortcut.conv1"),
                                         unit.shortcut):
                rows += _conv_bn_act_rows(f"{prefix}.{stage_name}",
                                          stage.conv.spec, e_out,
                                          act=stage.act is not None)
    rows.append(_row(f"{prefix}.act", "prelu", cfg.out_channels,
                     cfg.out_channels, e_out, cfg.out_channels, 0))
    return rows
