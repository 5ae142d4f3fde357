#!/usr/bin/env python3
"""Timing comparison of the two kernel backends.

Runs the convolution shapes that dominate the network's runtime through
both the numba path (compiled direct loops) and the numpy path
(stride-trick gathers), plus one full-network forward. The first call on
the numba path is excluded as JIT warm-up. Results agree to 1e-12; this
script only reports speed.

Usage:
    python3 benchmarks/bench_backends.py [--repeats N] [--extent E]
"""

import argparse
import statistics
import time

import numpy as np

from espnetv2 import backend as bk
from espnetv2.conv import ConvSpec, conv_backward, conv_forward
from espnetv2.network import build_network
from espnetv2.tensor import make_rng


def conv_case(label, spec, batch, extent, backward=False):
    rng = make_rng(7)
    x = rng.standard_normal((batch, spec.in_channels, extent, extent))
    w = rng.standard_normal(spec.weight_shape)
    if not backward:
        return label, lambda: conv_forward(spec, w, x)
    gy = np.ones_like(conv_forward(spec, w, x))
    return label + " bwd", lambda: conv_backward(spec, w, x, gy)


def network_case(extent):
    net = build_network("c28", 0, input_extent=extent)
    rng = make_rng(11)
    x = rng.standard_normal((1, 3, extent, extent))
    return f"c28 forward @{extent}", lambda: net.forward(x, train=False)


def build_cases(extent):
    # the shapes a c28 forward spends its time in: the stem, one grouped
    # pointwise pair, and depthwise branches at the widest stage
    return [
        conv_case("stem 3x3/2 3->32", ConvSpec.standard(3, 32, 3, stride=2),
                  4, extent),
        conv_case("group pw 128->128 g4", ConvSpec.group(128, 128, 1, 4),
                  4, extent // 8),
        conv_case("depthwise 3x3 d4 c64", ConvSpec.depthwise(64, 3, dilation=4),
                  4, extent // 4),
        conv_case("depthwise 3x3/2 c64", ConvSpec.depthwise(64, 3, stride=2),
                  4, extent // 4),
        conv_case("depthwise 3x3 d4 c64", ConvSpec.depthwise(64, 3, dilation=4),
                  4, extent // 4, backward=True),
        network_case(extent),
    ]


def time_one(fn, repeats):
    fn()  # warm-up; compiles on the numba path, touches caches on numpy
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return mean, std


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--extent", type=int, default=224,
                    help="input resolution, multiple of 32")
    args = ap.parse_args()

    names = bk.available_backends()
    if "numba" not in names:
        print("numba is not importable; timing the numpy path alone")

    results = {}
    for name in names:
        bk.set_backend(name)
        for label, fn in build_cases(args.extent):
            results.setdefault(label, {})[name] = time_one(fn, args.repeats)

    width = max(len(label) for label in results)
    header = f"{'case':<{width}}"
    for name in names:
        header += f"  {name + ' (ms)':>18}"
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, per in results.items():
        line = f"{label:<{width}}"
        for name in names:
            mean, std = per[name]
            line += f"  {mean * 1e3:10.3f} ±{std * 1e3:5.3f}"
        if len(names) == 2:
            line += f"  {per['numpy'][0] / per['numba'][0]:7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
