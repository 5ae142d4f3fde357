"""Built-in consistency checks, runnable from the command line.

Each suite exercises one module's invariants against small independent
references computed right here (padded-patch convolution loops, closed
formulas, brute-force tap unions). The references deliberately share no
code with either kernel backend, so a regression in one path cannot
hide in the other.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .analysis import REFERENCE_BUDGETS, gridding_probe, profile
from .conv import ConvSpec, conv_backward, conv_forward, param_count
from .eesp import (EespConfig, EespUnit, StridedEesp, esp_vs_eesp_param_ratio,
                   hff_fuse, unit_conv_specs)
from .eru import EruCell, EruConfig, eru_param_count, lstm_param_count
from .network import build_network, rates_for_level
from .tensor import batch_norm, he_init, make_rng
from .training import LrSchedule, TrainConfig, lr_at, train_toy


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "ok  " if self.passed else "FAIL"
        text = f"{mark} {self.suite}:{self.name}"
        return f"{text}  ({self.detail})" if self.detail else text


def _reference_conv2d(x, w, stride, dilation, groups, pad):
    """Padded-patch convolution loops, independent of both backends."""
    n, cin, h, wd = x.shape
    cout, cpg, kh, kw = w.shape
    oh = (h + 2 * pad - dilation * (kh - 1) - 1) // stride + 1
    ow = (wd + 2 * pad - dilation * (kw - 1) - 1) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    y = np.zeros((n, cout, oh, ow))
    opg = cout // groups
    for co in range(cout):
        ci0 = (co // opg) * cpg
        for i in range(oh):
            r = slice(i * stride, i * stride + dilation * (kh - 1) + 1, dilation)
            for j in range(ow):
                c = slice(j * stride, j * stride + dilation * (kw - 1) + 1, dilation)
                patch = xp[:, ci0:ci0 + cpg, r, c]
                y[:, co, i, j] = (patch * w[co]).sum(axis=(1, 2, 3))
    return y


def _max_err(a, b) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def _conv_suite():
    rng = make_rng(2024)
    results = []
    cases = [
        ConvSpec.standard(3, 8, 3, stride=1),
        ConvSpec.standard(4, 6, 3, stride=2, dilation=2),
        ConvSpec.group(8, 8, 1, 4),
        ConvSpec.depthwise(6, 3, dilation=3),
        ConvSpec.depthwise(5, 3, stride=2, dilation=2),
        ConvSpec.standard(3, 5, 1),
    ]
    worst = 0.0
    for spec in cases:
        x = rng.standard_normal((2, spec.in_channels, 11, 11))
        w = rng.standard_normal(spec.weight_shape)
        got = conv_forward(spec, w, x)
        want = _reference_conv2d(x, w, spec.stride, spec.dilation,
                                 spec.groups, spec.padding)
        worst = max(worst, _max_err(got, want))
    results.append(CheckResult(
        "conv", "forward matches padded-patch reference", worst <= 1e-12,
        f"max err {worst:.2e} over {len(cases)} kinds"))

    spec = ConvSpec.group(8, 8, 1, 4)
    x = rng.standard_normal((2, 8, 7, 7))
    w = rng.standard_normal(spec.weight_shape)
    grouped = conv_forward(spec, w, x)
    pieces = []
    for k in range(4):
        sub = ConvSpec.standard(2, 2, 1)
        pieces.append(conv_forward(sub, w[2 * k:2 * k + 2], x[:, 2 * k:2 * k + 2]))
    err = _max_err(grouped, np.concatenate(pieces, axis=1))
    results.append(CheckResult(
        "conv", "grouped 1x1 equals independent per-group 1x1", err <= 1e-12,
        f"max err {err:.2e}"))

    spec = ConvSpec.depthwise(4, 3, dilation=2)
    x = rng.standard_normal((2, 4, 9, 9))
    w = rng.standard_normal(spec.weight_shape)
    gy = rng.standard_normal(conv_forward(spec, w, x).shape)
    gx, gw, _ = conv_backward(spec, w, x, gy)
    h = 1e-6
    idx = (1, 0, 1, 2)
    wp, wm = w.copy(), w.copy()
    wp[idx] += h
    wm[idx] -= h
    fd = ((conv_forward(spec, wp, x) * gy).sum()
          - (conv_forward(spec, wm, x) * gy).sum()) / (2 * h)
    err = abs(fd - gw[idx]) / max(1.0, abs(fd))
    results.append(CheckResult(
        "conv", "weight gradient matches finite difference", err < 1e-6,
        f"rel err {err:.2e}"))
    used = float(np.abs(gx).sum()) > 0
    results.append(CheckResult(
        "conv", "input gradient is populated", used))
    return results


def _tensor_suite():
    rng = make_rng(7)
    results = []
    w = he_init(64, (200_000,), rng)
    std = float(w.std())
    want = float(np.sqrt(2.0 / 64))
    results.append(CheckResult(
        "tensor", "he init std near sqrt(2/fan_in)",
        abs(std - want) / want < 0.02, f"std {std:.4f} vs {want:.4f}"))

    a = make_rng(123).standard_normal(5)
    b = make_rng(123).standard_normal(5)
    results.append(CheckResult(
        "tensor", "seeded rng streams are reproducible", bool(np.all(a == b))))

    x = rng.standard_normal((8, 5, 6, 6))
    y, _, _ = batch_norm(x, np.ones(5), np.zeros(5), np.zeros(5), np.ones(5),
                         train=True)
    mean = float(np.abs(y.mean(axis=(0, 2, 3))).max())
    var = float(np.abs(y.var(axis=(0, 2, 3)) - 1.0).max())
    # the epsilon inside the square root shifts output variance by ~1e-5
    results.append(CheckResult(
        "tensor", "train-mode batch norm standardizes channels",
        mean < 1e-10 and var < 1e-4, f"|mean| {mean:.2e}, |var-1| {var:.2e}"))
    return results


def _eesp_suite():
    rng = make_rng(11)
    results = []
    parts = [rng.standard_normal((2, 3, 4, 4)) for _ in range(4)]
    fused = hff_fuse(parts)
    err = max(_max_err(fused[k], sum(parts[:k + 1])) for k in range(4))
    results.append(CheckResult(
        "eesp", "hierarchical fusion is the running sum", err <= 1e-12,
        f"max err {err:.2e}"))

    cfg = EespConfig(32, 32, 4, 4)
    specs = unit_conv_specs(cfg)
    widths = sum(s.out_channels for name, s in specs if name.startswith("branch"))
    results.append(CheckResult(
        "eesp", "branch widths concatenate to the unit width",
        widths == cfg.out_channels, f"{widths} vs {cfg.out_channels}"))

    unit = EespUnit(cfg, rng)
    y = unit(rng.standard_normal((2, 32, 14, 14)))
    results.append(CheckResult(
        "eesp", "stride-1 unit preserves its shape",
        y.shape == (2, 32, 14, 14), f"got {y.shape}"))

    scfg = EespConfig(32, 64, 4, 4, stride=2)
    down = StridedEesp(scfg, rng)
    img = rng.standard_normal((2, 3, 56, 56))
    y = down(rng.standard_normal((2, 32, 14, 14)), image=img)
    results.append(CheckResult(
        "eesp", "strided unit halves extent and grows channels",
        y.shape == (2, 64, 7, 7), f"got {y.shape}"))

    ratio = esp_vs_eesp_param_ratio(240, 60, 4, 4)
    results.append(CheckResult(
        "eesp", "parameter ratio vs the ungrouped block is near 7x",
        6.5 <= ratio <= 7.5, f"ratio {ratio:.3f}"))
    return results


def _network_suite():
    results = []
    worst_p, worst_m = 0.0, 0.0
    for name, (ref_p, ref_m) in REFERENCE_BUDGETS.items():
        report = profile(build_network(name))
        worst_p = max(worst_p, abs(report.total_params - ref_p) / ref_p)
        worst_m = max(worst_m, abs(report.total_macs - ref_m) / ref_m)
    results.append(CheckResult(
        "network", "parameters within 5% of reference budgets",
        worst_p < 0.05, f"worst {100 * worst_p:.2f}%"))
    results.append(CheckResult(
        "network", "macs within 10% of reference budgets",
        worst_m < 0.10, f"worst {100 * worst_m:.2f}%"))

    got = [rates_for_level(e, 4) for e in (56, 28, 14, 7)]
    want = [(1, 2, 3, 4), (1, 2, 3, 4), (1, 2, 3, 3), (1, 2, 2, 2)]
    results.append(CheckResult(
        "network", "dilation rates clamp to the level caps",
        got == want, f"{got}"))

    net = build_network("c28", 0, input_extent=64)
    logits = net.forward(make_rng(5).standard_normal((1, 3, 64, 64)))
    results.append(CheckResult(
        "network", "forward pass produces finite class scores",
        logits.shape == (1, 1000) and bool(np.isfinite(logits).all()),
        f"shape {logits.shape}"))
    return results


def _schedule_suite():
    sched = LrSchedule()
    cases = {0: 0.5, 4: 0.1, 5: 0.5, 12: 0.3, 50: 0.25, 101: 0.1}
    worst = max(abs(lr_at(sched, e) - v) for e, v in cases.items())
    results = [CheckResult(
        "schedule", "cyclic rates restart and halve at milestones",
        worst <= 1e-15, f"max err {worst:.1e}")]
    fixed = LrSchedule(mode="fixed")
    ok = (lr_at(fixed, 49) == 0.5 and lr_at(fixed, 50) == 0.25
          and lr_at(fixed, 129) == 0.125 and lr_at(fixed, 130) == 0.0625)
    results.append(CheckResult(
        "schedule", "fixed mode only applies milestone halvings", ok))
    return results


def _train_suite():
    cfg = TrainConfig(epochs=2, batch_size=16, train_size=64, eval_size=32)
    r1 = train_toy("cyclic", cfg)
    r2 = train_toy("cyclic", cfg)
    results = [CheckResult(
        "train", "two-epoch run finishes with finite loss",
        np.isfinite(r1.history[-1]["loss"]),
        f"loss {r1.history[-1]['loss']:.3f}, acc {r1.final_accuracy:.2f}")]
    same = all(a == b for a, b in zip(r1.history, r2.history))
    results.append(CheckResult(
        "train", "training is bitwise deterministic for a fixed seed", same))
    return results


def _gridding_suite():
    solo = gridding_probe([4], use_hff=False)
    fused = gridding_probe([1, 2, 3, 4], use_hff=True)
    results = [CheckResult(
        "gridding", "lone rate-4 branch touches 9 of 81 cells",
        abs(solo - 9 / 81) < 1e-12, f"{solo:.4f}"),
        CheckResult(
        "gridding", "fused branches densify the receptive field",
        fused > solo and abs(fused - 33 / 81) < 1e-12, f"{fused:.4f}"),
        CheckResult(
        "gridding", "rate-1 branch is fully dense",
        gridding_probe([1], use_hff=False) == 1.0)]
    return results


def _eru_suite():
    cfg = EruConfig(64, 64, channels=16, branches=4, groups=4)
    cell = EruCell(cfg, 3)
    rng = make_rng(9)
    h, c = cell.init_state(2)
    h2, c2 = cell.step(rng.standard_normal((2, 64)), h, c)
    results = [CheckResult(
        "eru", "one step yields finite hidden state of the right shape",
        h2.shape == (2, 64) and bool(np.isfinite(h2.data).all()))]
    hs, _ = cell.unroll(rng.standard_normal((3, 2, 64)))
    results.append(CheckResult(
        "eru", "unroll returns one hidden state per time step", len(hs) == 3))
    ours, dense = eru_param_count(cfg), lstm_param_count(64, 64)
    results.append(CheckResult(
        "eru", "cell undercuts the dense recurrent baseline",
        ours < dense, f"{ours} vs {dense} params"))
    return results


SUITES = {
    "conv": _conv_suite,
    "tensor": _tensor_suite,
    "eesp": _eesp_suite,
    "network": _network_suite,
    "schedule": _schedule_suite,
    "train": _train_suite,
    "gridding": _gridding_suite,
    "eru": _eru_suite,
}


def run_suites(names=None):
    """Run the requested suites (all by default); returns CheckResults."""
    if names is None:
        names = list(SUITES)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        results.extend(SUITES[name]())
    return results
