"""Dense float64 tensor utilities: RNG, initialization, elementwise ops,
channel concat/slice, and batch normalization.

Tensors are plain C-contiguous float64 ``np.ndarray`` values with layout
[batch, channels, ...spatial]. All randomness flows through an explicit
counter-based Philox generator so that identical seeds give identical
draw sequences across runs and platforms.
"""

import math

import numpy as np

from .errors import ConfigError, ShapeError


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic counter-based generator for the given seed."""
    return np.random.Generator(np.random.Philox(seed))


def split_rng(rng: np.random.Generator, n: int):
    """Split a generator into n independent child generators."""
    return tuple(rng.spawn(n))


def he_init(fan_in: int, shape, rng) -> np.ndarray:
    """Zero-mean normal draw with variance 2 / fan_in."""
    if fan_in <= 0:
        raise ConfigError(f"fan_in must be positive, got {fan_in}")
    std = math.sqrt(2.0 / fan_in)
    return std * np.asarray(rng.standard_normal(size=shape), dtype=np.float64)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"operands must have equal shapes, got {a.shape} vs {b.shape}")


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a + b


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a * b


def prelu(x: np.ndarray, slopes) -> np.ndarray:
    """Per-channel parametric ReLU; channel axis is 1.

    slopes may be a scalar or a 1-d array of length x.shape[1].
    """
    slopes = np.asarray(slopes, dtype=np.float64)
    if slopes.ndim > 1:
        raise ShapeError(f"slopes must be scalar or 1-d, got shape {slopes.shape}")
    if slopes.ndim == 1:
        if x.ndim < 2 or slopes.shape[0] != x.shape[1]:
            raise ShapeError(
                f"per-channel slopes of length {slopes.shape[0]} do not match "
                f"input with {x.shape[1] if x.ndim > 1 else 'no'} channels"
            )
        slopes = slopes.reshape((1, -1) + (1,) * (x.ndim - 2))
    return np.where(x >= 0.0, x, slopes * x)


def concat_channels(parts) -> np.ndarray:
    parts = list(parts)
    if not parts:
        raise ShapeError("concat_channels needs at least one tensor")
    base = parts[0].shape
    for p in parts[1:]:
        if p.shape[0] != base[0] or p.shape[2:] != base[2:]:
            raise ShapeError(
                f"non-channel dims must match, got {p.shape} vs {base}"
            )
    return np.ascontiguousarray(np.concatenate(parts, axis=1))


def slice_channels(x: np.ndarray, start: int, stop: int) -> np.ndarray:
    if not (0 <= start < stop <= x.shape[1]):
        raise ShapeError(
            f"channel slice [{start}:{stop}] out of range for {x.shape[1]} channels"
        )
    return np.ascontiguousarray(x[:, start:stop])


def _bn_axes(x):
    if x.ndim < 2:
        raise ShapeError(f"batch norm expects [batch, channels, ...], got {x.shape}")
    return (0,) + tuple(range(2, x.ndim))


def _bn_shape(x):
    return (1, x.shape[1]) + (1,) * (x.ndim - 2)


def batch_norm(x, scale, shift, running_mean, running_var,
               train: bool, momentum: float = 0.1, eps: float = 1e-5):
    """Per-channel batch normalization.

    Train mode normalizes with biased batch statistics and returns
    running stats updated as (1 - momentum) * old + momentum * batch.
    Eval mode is the affine map through the supplied running stats.
    Returns (y, running_mean, running_var); inputs are not mutated.
    """
    scale = np.asarray(scale, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    c = x.shape[1] if x.ndim > 1 else 0
    for name, arr in (("scale", scale), ("shift", shift),
                      ("running_mean", np.asarray(running_mean)),
                      ("running_var", np.asarray(running_var))):
        if arr.shape != (c,):
            raise ShapeError(f"{name} must have shape ({c},), got {arr.shape}")
    axes = _bn_axes(x)
    bshape = _bn_shape(x)
    if train:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)  # biased, same convention as the running estimate
        new_mean = (1.0 - momentum) * np.asarray(running_mean) + momentum * mean
        new_var = (1.0 - momentum) * np.asarray(running_var) + momentum * var
    else:
        mean = np.asarray(running_mean, dtype=np.float64)
        var = np.asarray(running_var, dtype=np.float64)
        new_mean = mean
        new_var = var
    inv = 1.0 / np.sqrt(var + eps)
    y = (x - mean.reshape(bshape)) * (scale * inv).reshape(bshape) + shift.reshape(bshape)
    return y, np.asarray(new_mean, dtype=np.float64), np.asarray(new_var, dtype=np.float64)
