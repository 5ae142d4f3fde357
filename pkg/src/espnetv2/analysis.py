"""Analytical cost profiling and structural probes.

Reports are pure integer arithmetic over the network's layer ledger, so
totals are bit-exact across runs. MAC counting covers convolutions and
the classifier matmul only; batch norm, PReLU, pooling, and elementwise
adds are excluded. Two conventions are exposed: ``count_classifier``
(include the fully-connected layer's MACs) and ``count_bias`` (include
bias MACs for counted rows). Both default off, which is the convention
that matches the reference per-profile budgets. Parameter totals always
include everything learnable.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .conv import ConvSpec, conv_forward
from .eesp import hff_fuse
from .errors import ConfigError
from .network import build_network, get_profile

SCHEMA_VERSION = 1

# reference (params, macs-at-224) budgets per profile
REFERENCE_BUDGETS = {
    "c28": (1_240_000, 28_000_000),
    "c86": (1_670_000, 86_000_000),
    "c123": (1_970_000, 123_000_000),
    "c169": (2_310_000, 169_000_000),
    "c224": (3_030_000, 224_000_000),
    "c284": (3_490_000, 284_000_000),
}

SWAP_ARMS = ("dilated_standard", "depthwise_separable", "depthwise_dilated_separable")

_ARM_STYLE = {
    "dilated_standard": "esp",
    "depthwise_separable": "eesp_plain",
    "depthwise_dilated_separable": "eesp",
}


@dataclass
class CostReport:
    rows: list
    profile_name: str
    input_extent: int
    count_classifier: bool = False
    count_bias: bool = False
    label: str = ""

    @property
    def total_params(self) -> int:
        return sum(r["params"] for r in self.rows)

    @property
    def total_macs(self) -> int:
        total = 0
        for r in self.rows:
            if r["kind"] == "fc" and not self.count_classifier:
                continue
            total += r["macs"]
            if self.count_bias:
                total += r["bias_macs"]
        return total

    @property
    def reference(self):
        return REFERENCE_BUDGETS.get(self.profile_name)

    def conventions(self) -> dict:
        return {"count_classifier": self.count_classifier,
                "count_bias": self.count_bias}

    def to_dict(self) -> dict:
        ref = self.reference
        return {
            "schema_version": SCHEMA_VERSION,
            "profile": self.profile_name,
            "label": self.label,
            "input_extent": self.input_extent,
            "conventions": self.conventions(),
            "totals": {"params": self.total_params, "macs": self.total_macs},
            "reference": (None if ref is None
                          else {"params": ref[0], "macs": ref[1]}),
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(self.rows[0].keys()))
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()

    def stage_totals(self):
        """(stage, out_extent, params, macs) aggregated by top-level name."""
        order, acc = [], {}
        for r in self.rows:
            key = r["name"].split(".", 1)[0]
            if key not in acc:
                order.append(key)
                acc[key] = [r["out_extent"], 0, 0]
            acc[key][0] = r["out_extent"]
            acc[key][1] += r["params"]
            macs = r["macs"] if (r["kind"] != "fc" or self.count_classifier) else 0
            acc[key][2] += macs
        return [(k, *acc[k]) for k in order]

    def to_text(self, full: bool = False) -> str:
        lines = []
        head = f"profile {self.profile_name}  input {self.input_extent}x{self.input_extent}"
        if self.label:
            head += f"  [{self.label}]"
        lines.append(head)
        lines.append(f"{'layer':34} {'kind':12} {'out':>5} {'params':>10} {'macs':>13}")
        rows = (self.rows if full else
                [(k, "stage", e, p, m) for k, e, p, m in self.stage_totals()])
        for r in rows:
            if isinstance(r, dict):
                lines.append(f"{r['name']:34} {r['kind']:12} {r['out_extent']:>5} "
                             f"{r['params']:>10} {r['macs']:>13}")
            else:
                k, kind, e, p, m = r
                lines.append(f"{k:34} {kind:12} {e:>5} {p:>10} {m:>13}")
        lines.append(f"{'total':34} {'':12} {'':>5} {self.total_params:>10} "
                     f"{self.total_macs:>13}")
        ref = self.reference
        if ref is not None:
            dp = 100.0 * (self.total_params - ref[0]) / ref[0]
            dm = 100.0 * (self.total_macs - ref[1]) / ref[1]
            lines.append(f"reference {ref[0]:,} params ({dp:+.1f}%), "
                         f"{ref[1]:,} macs ({dm:+.1f}%)")
        lines.append(f"conventions: {self.conventions()}")
        return "\n".join(lines)


def profile(net, input_extent: int = None, count_classifier: bool = False,
            count_bias: bool = False, label: str = "") -> CostReport:
    """Cost a built network analytically (no arrays are touched)."""
    rows = net.cost_entries(input_extent)
    return CostReport(rows, net.profile.name,
                      net.input_extent if input_extent is None else input_extent,
                      count_classifier, count_bias, label)


def conv_swap_compare(profile_name, arm: str, input_extent: int = 224) -> CostReport:
    """Cost the network with branch convolutions swapped per arm.

    Arms: ``dilated_standard`` (the esp ablation baseline: ungrouped
    reduce, standard dilated branches, no projection),
    ``depthwise_separable`` (all dilation rates forced to 1), and
    ``depthwise_dilated_separable`` (the unmodified network).
    """
    if arm not in SWAP_ARMS:
        raise ConfigError(f"arm must be one of {SWAP_ARMS}, got {arm!r}")
    name = get_profile(profile_name).name
    net = build_network(name, 0, input_extent, unit_style=_ARM_STYLE[arm])
    return profile(net, label=arm)


def conv_swap_summary(profile_name, input_extent: int = 224) -> dict:
    """Three-arm comparison plus the dilated-vs-separable MAC factor."""
    reports = {arm: conv_swap_compare(profile_name, arm, input_extent)
               for arm in SWAP_ARMS}
    sep = reports["depthwise_dilated_separable"]
    dil = reports["dilated_standard"]
    return {
        "schema_version": SCHEMA_VERSION,
        "profile": get_profile(profile_name).name,
        "input_extent": input_extent,
        "arms": {arm: {"params": r.total_params, "macs": r.total_macs}
                 for arm, r in reports.items()},
        "macs_ratio_dilated_vs_separable": dil.total_macs / sep.total_macs,
    }


def gridding_probe(rates, use_hff: bool = True, kernel: int = 3) -> float:
    """Fraction of nonzero cells inside the maximal effective receptive
    field of an impulse response.

    Branches are single-channel dilated convolutions with all-ones
    kernels. With ``use_hff`` the fused (prefix-summed) response is
    probed; without it, only the largest-rate branch, whose sparse tap
    pattern is the gridding artifact.
    """
    rates = tuple(int(r) for r in rates)
    if not rates or any(r < 1 for r in rates):
        raise ConfigError(f"rates must be positive integers, got {rates}")
    if any(b < a for a, b in zip(rates, rates[1:])):
        raise ConfigError(f"rates must be non-decreasing, got {rates}")
    field = (kernel - 1) * max(rates) + 1
    size = 2 * field + 1
    center = size // 2
    x = np.zeros((1, 1, size, size))
    x[0, 0, center, center] = 1.0
    ones = np.ones((1, 1, kernel, kernel))
    branches = [conv_forward(ConvSpec.standard(1, 1, kernel, dilation=r), ones, x)
                for r in rates]
    resp = hff_fuse(branches)[-1] if use_hff else branches[-1]
    half = (field - 1) // 2
    window = resp[0, 0, center - half:center + half + 1,
                  center - half:center + half + 1]
    return float(np.count_nonzero(window)) / float(field * field)
