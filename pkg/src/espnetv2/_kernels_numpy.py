"""Vectorized convolution kernels built on numpy stride tricks.

Forward and weight gradients gather dilated/strided windows with
``sliding_window_view`` and contract with ``einsum``; the input gradient
scatters one kernel tap at a time through strided slice assignment.
Same signatures and layouts as the numba backend.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows2d(x, kh, kw, stride, dilation, pad):
    span_h = dilation * (kh - 1) + 1
    span_w = dilation * (kw - 1) + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (span_h, span_w), axis=(2, 3))
    return win[:, :, ::stride, ::stride, ::dilation, ::dilation]


def conv2d_forward(x, w, stride, dilation, groups, pad):
    n, cin = x.shape[:2]
    cout, cpg, kh, kw = w.shape
    win = _windows2d(x, kh, kw, stride, dilation, pad)
    oh, ow = win.shape[2], win.shape[3]
    wing = win.reshape(n, groups, cpg, oh, ow, kh, kw)
    wg = w.reshape(groups, cout // groups, cpg, kh, kw)
    y = np.einsum("ngihwuv,goiuv->ngohw", wing, wg, optimize=True)
    return np.ascontiguousarray(y.reshape(n, cout, oh, ow))


def conv2d_grad_input(gy, w, cin, h, wd, stride, dilation, groups, pad):
    n, cout, oh, ow = gy.shape
    cpg, kh, kw = w.shape[1:]
    gyg = gy.reshape(n, groups, cout // groups, oh, ow)
    wg = w.reshape(groups, cout // groups, cpg, kh, kw)
    t = np.einsum("ngohw,goiuv->ngihwuv", gyg, wg, optimize=True)
    t = t.reshape(n, cin, oh, ow, kh, kw)
    gxp = np.zeros((n, cin, h + 2 * pad, wd + 2 * pad))
    for u in range(kh):
        r0 = u * dilation
        r1 = r0 + stride * (oh - 1) + 1
        for v in range(kw):
            c0 = v * dilation
            c1 = c0 + stride * (ow - 1) + 1
            gxp[:, :, r0:r1:stride, c0:c1:stride] += t[:, :, :, :, u, v]
    return np.ascontiguousarray(gxp[:, :, pad:pad + h, pad:pad + wd])


def conv2d_grad_weight(x, gy, kh, kw, stride, dilation, groups, pad):
    n, cin = x.shape[:2]
    cout = gy.shape[1]
    cpg = cin // groups
    win = _windows2d(x, kh, kw, stride, dilation, pad)
    oh, ow = win.shape[2], win.shape[3]
    wing = win.reshape(n, groups, cpg, oh, ow, kh, kw)
    gyg = gy.reshape(n, groups, cout // groups, oh, ow)
    gw = np.einsum("ngihwuv,ngohw->goiuv", wing, gyg, optimize=True)
    return np.ascontiguousarray(gw.reshape(cout, cpg, kh, kw))


def _windows1d(x, k, stride, dilation, pad):
    span = dilation * (k - 1) + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    win = sliding_window_view(xp, span, axis=2)
    return win[:, :, ::stride, ::dilation]


def conv1d_forward(x, w, stride, dilation, groups, pad):
    n, cin = x.shape[:2]
    cout, cpg, k = w.shape
    win = _windows1d(x, k, stride, dilation, pad)
    ol = win.shape[2]
    wing = win.reshape(n, groups, cpg, ol, k)
    wg = w.reshape(groups, cout // groups, cpg, k)
    y = np.einsum("ngitu,goiu->ngot", wing, wg, optimize=True)
    return np.ascontiguousarray(y.reshape(n, cout, ol))


def conv1d_grad_input(gy, w, cin, length, stride, dilation, groups, pad):
    n, cout, ol = gy.shape
    cpg, k = w.shape[1:]
    gyg = gy.reshape(n, groups, cout // groups, ol)
    wg = w.reshape(groups, cout // groups, cpg, k)
    t = np.einsum("ngot,goiu->ngitu", gyg, wg, optimize=True)
    t = t.reshape(n, cin, ol, k)
    gxp = np.zeros((n, cin, length + 2 * pad))
    for u in range(k):
        r0 = u * dilation
        r1 = r0 + stride * (ol - 1) + 1
        gxp[:, :, r0:r1:stride] += t[:, :, :, u]
    return np.ascontiguousarray(gxp[:, :, pad:pad + length])


def conv1d_grad_weight(x, gy, k, stride, dilation, groups, pad):
    n, cin = x.shape[:2]
    cout = gy.shape[1]
    cpg = cin // groups
    win = _windows1d(x, k, stride, dilation, pad)
    ol = win.shape[2]
    wing = win.reshape(n, groups, cpg, ol, k)
    gyg = gy.reshape(n, groups, cout // groups, ol)
    gw = np.einsum("ngitu,ngot->goiu", wing, gyg, optimize=True)
    return np.ascontiguousarray(gw.reshape(cout, cpg, k))
