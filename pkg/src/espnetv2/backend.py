"""Kernel backend selection.

Two interchangeable implementations of the convolution kernels ship with
the package:

* ``"numba"`` — direct nested loops compiled with ``numba.njit``
* ``"numpy"`` — vectorized gather/scatter built on stride tricks

The active backend is picked from the ``ESPNETV2_BACKEND`` environment
variable (``numba`` or ``numpy``) at import time, defaulting to the
compiled path whenever numba imports cleanly, and can be switched at
runtime with :func:`set_backend`. The two paths must agree to 1e-12;
the test suite enforces this, which makes the fast path self-verifying.
"""

import os

from . import _kernels_numpy

try:
    from . import _kernels_numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    _kernels_numba = None
    HAS_NUMBA = False

_NAMES = ("numba", "numpy")


def _from_env() -> str:
    name = os.environ.get("ESPNETV2_BACKEND", "").strip().lower()
    if not name:
        return "numba" if HAS_NUMBA else "numpy"
    if name not in _NAMES:
        raise ValueError(f"ESPNETV2_BACKEND must be one of {_NAMES}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("ESPNETV2_BACKEND=numba but numba is not importable")
    return name


_active = _from_env()


def active_backend() -> str:
    return _active


def available_backends() -> tuple:
    return _NAMES if HAS_NUMBA else ("numpy",)


def set_backend(name: str) -> None:
    global _active
    if name not in _NAMES:
        raise ValueError(f"backend must be one of {_NAMES}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    _active = name


def _impl():
    return _kernels_numba if _active == "numba" else _kernels_numpy


def conv2d_forward(x, w, stride, dilation, groups, pad):
    return _impl().conv2d_forward(x, w, stride, dilation, groups, pad)


def conv2d_grad_input(gy, w, cin, h, wd, stride, dilation, groups, pad):
    return _impl().conv2d_grad_input(gy, w, cin, h, wd, stride, dilation, groups, pad)


def conv2d_grad_weight(x, gy, kh, kw, stride, dilation, groups, pad):
    return _impl().conv2d_grad_weight(x, gy, kh, kw, stride, dilation, groups, pad)


def conv1d_forward(x, w, stride, dilation, groups, pad):
    return _impl().conv1d_forward(x, w, stride, dilation, groups, pad)


def conv1d_grad_input(gy, w, cin, length, stride, dilation, groups, pad):
    return _impl().conv1d_grad_input(gy, w, cin, length, stride, dilation, groups, pad)


def conv1d_grad_weight(x, gy, k, stride, dilation, groups, pad):
    return _impl().conv1d_grad_weight(x, gy, k, stride, dilation, groups, pad)
