"""Efficient grouped/dilated convolution building blocks, the network
family built from them, analytical cost profiling, and a small training
stack, all on plain float64 numpy arrays.

Hot convolution kernels run through a compiled backend when available
and fall back to a pure-numpy path; see :mod:`espnetv2.backend`.
"""

from .analysis import (CostReport, REFERENCE_BUDGETS, conv_swap_compare,
                       conv_swap_summary, gridding_probe, profile)
from .backend import active_backend, available_backends, set_backend
from .conv import (ConvSpec, conv_backward, conv_forward,
                   cost_reduction_separable, effective_receptive_field,
                   mac_count, out_extent, param_count, separable_mac_count,
                   separable_param_count)
from .eesp import (EespConfig, EespUnit, StridedEesp, eesp_param_count,
                   esp_vs_eesp_param_ratio, hff_fuse, unit_conv_specs)
from .errors import ConfigError, ShapeError, TrainingDiverged
from .eru import (EruCell, EruConfig, Eesp1dUnit, eru_param_count,
                  lstm_param_count)
from .network import (EspNetv2, NetworkProfile, PROFILES, build_network,
                      get_profile, rates_for_level, receptive_cap)
from .tensor import make_rng, split_rng
from .training import (LrSchedule, SGD, TrainConfig, TrainResult,
                       cross_entropy, evaluate_accuracy, history_to_csv,
                       lr_at, make_toy_dataset, schedule_table, sgd_update,
                       train_toy)
from .verify import CheckResult, run_suites

__version__ = "0.1.0"

__all__ = [
    "CheckResult", "ConfigError", "ConvSpec", "CostReport", "EespConfig",
    "EespUnit", "EruCell", "EruConfig", "Eesp1dUnit", "EspNetv2",
    "LrSchedule", "NetworkProfile", "PROFILES", "REFERENCE_BUDGETS", "SGD",
    "ShapeError", "StridedEesp", "TrainConfig", "TrainResult",
    "TrainingDiverged", "active_backend", "available_backends",
    "build_network", "conv_backward", "conv_forward", "conv_swap_compare",
    "conv_swap_summary", "cost_reduction_separable", "cross_entropy",
    "eesp_param_count", "effective_receptive_field", "eru_param_count",
    "esp_vs_eesp_param_ratio", "evaluate_accuracy", "get_profile",
    "gridding_probe", "hff_fuse", "history_to_csv", "lr_at",
    "lstm_param_count", "mac_count", "make_rng", "make_toy_dataset",
    "out_extent", "param_count", "profile", "rates_for_level",
    "receptive_cap", "run_suites", "schedule_table", "separable_mac_count",
    "separable_param_count", "set_backend", "sgd_update", "split_rng",
    "train_toy", "unit_conv_specs",
]
