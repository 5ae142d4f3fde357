"""Direct-loop convolution kernels compiled with numba.

Padding is handled by bounds checks instead of materializing a padded
copy, so the loops stay allocation-free. Weight layout is
[out_channels, in_channels // groups, ...taps], inputs are
[batch, channels, ...spatial], everything float64 C-contiguous.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward(x, w, stride, dilation, groups, pad):
    n, cin, h, wd = x.shape
    cout, cpg, kh, kw = w.shape
    opg = cout // groups
    oh = (h + 2 * pad - dilation * (kh - 1) - 1) // stride + 1
    ow = (wd + 2 * pad - dilation * (kw - 1) - 1) // stride + 1
    y = np.zeros((n, cout, oh, ow), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(oh):
                ih0 = i * stride - pad
                for j in range(ow):
                    iw0 = j * stride - pad
                    acc = 0.0
                    for ci in range(cpg):
                        for u in range(kh):
                            ih = ih0 + u * dilation
                            if ih < 0 or ih >= h:
                                continue
                            for v in range(kw):
                                iw = iw0 + v * dilation
                                if iw < 0 or iw >= wd:
                                    continue
                                acc += x[b, ci0 + ci, ih, iw] * w[co, ci, u, v]
                    y[b, co, i, j] = acc
    return y


@njit(cache=True)
def conv2d_grad_input(gy, w, cin, h, wd, stride, dilation, groups, pad):
    n, cout, oh, ow = gy.shape
    _, cpg, kh, kw = w.shape
    opg = cout // groups
    gx = np.zeros((n, cin, h, wd), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(oh):
                ih0 = i * stride - pad
                for j in range(ow):
                    iw0 = j * stride - pad
                    g = gy[b, co, i, j]
                    if g == 0.0:
                        continue
                    for ci in range(cpg):
                        for u in range(kh):
                            ih = ih0 + u * dilation
                            if ih < 0 or ih >= h:
                                continue
                            for v in range(kw):
                                iw = iw0 + v * dilation
                                if iw < 0 or iw >= wd:
                                    continue
                                gx[b, ci0 + ci, ih, iw] += g * w[co, ci, u, v]
    return gx


@njit(cache=True)
def conv2d_grad_weight(x, gy, kh, kw, stride, dilation, groups, pad):
    n, cin, h, wd = x.shape
    cout = gy.shape[1]
    oh = gy.shape[2]
    ow = gy.shape[3]
    cpg = cin // groups
    opg = cout // groups
    gw = np.zeros((cout, cpg, kh, kw), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(oh):
                ih0 = i * stride - pad
                for j in range(ow):
                    iw0 = j * stride - pad
                    g = gy[b, co, i, j]
                    if g == 0.0:
                        continue
                    for ci in range(cpg):
                        for u in range(kh):
                            ih = ih0 + u * dilation
                            if ih < 0 or ih >= h:
                                continue
                            for v in range(kw):
                                iw = iw0 + v * dilation
                                if iw < 0 or iw >= wd:
                                    continue
                                gw[co, ci, u, v] += g * x[b, ci0 + ci, ih, iw]
    return gw


@njit(cache=True)
def conv1d_forward(x, w, stride, dilation, groups, pad):
    n, cin, length = x.shape
    cout, cpg, k = w.shape
    opg = cout // groups
    ol = (length + 2 * pad - dilation * (k - 1) - 1) // stride + 1
    y = np.zeros((n, cout, ol), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(ol):
                it0 = i * stride - pad
                acc = 0.0
                for ci in range(cpg):
                    for u in range(k):
                        it = it0 + u * dilation
                        if it < 0 or it >= length:
                            continue
                        acc += x[b, ci0 + ci, it] * w[co, ci, u]
                y[b, co, i] = acc
    return y


@njit(cache=True)
def conv1d_grad_input(gy, w, cin, length, stride, dilation, groups, pad):
    n, cout, ol = gy.shape
    _, cpg, k = w.shape
    opg = cout // groups
    gx = np.zeros((n, cin, length), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(ol):
                it0 = i * stride - pad
                g = gy[b, co, i]
                if g == 0.0:
                    continue
                for ci in range(cpg):
                    for u in range(k):
                        it = it0 + u * dilation
                        if it < 0 or it >= length:
                            continue
                        gx[b, ci0 + ci, it] += g * w[co, ci, u]
    return gx


@njit(cache=True)
def conv1d_grad_weight(x, gy, k, stride, dilation, groups, pad):
    n, cin, length = x.shape
    cout = gy.shape[1]
    ol = gy.shape[2]
    cpg = cin // groups
    opg = cout // groups
    gw = np.zeros((cout, cpg, k), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(ol):
                it0 = i * stride - pad
                g = gy[b, co, i]
                if g == 0.0:
                    continue
                for ci in range(cpg):
                    for u in range(k):
                        it = it0 + u * dilation
                        if it < 0 or it >= length:
                            continue
                        gw[co, ci, u] += g * x[b, ci0 + ci, it]
    return gw
