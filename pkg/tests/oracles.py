"""Independent references the tests check production code against.

Everything here is deliberately written the slow, obvious way (scalar
loops, explicit set arithmetic, plain gradient descent) and shares no
code with either kernel backend or the autograd ops.
"""

import numpy as np


def reference_conv2d(x, w, stride=1, dilation=1, groups=1, pad=0):
    """Scalar-loop 2D convolution over an explicitly padded buffer."""
    n, cin, h, wd = x.shape
    cout, cpg, kh, kw = w.shape
    oh = (h + 2 * pad - dilation * (kh - 1) - 1) // stride + 1
    ow = (wd + 2 * pad - dilation * (kw - 1) - 1) // stride + 1
    xp = np.zeros((n, cin, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + wd] = x
    opg = cout // groups
    y = np.zeros((n, cout, oh, ow))
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for ci in range(cpg):
                        for u in range(kh):
                            for v in range(kw):
                                acc += (xp[b, ci0 + ci,
                                           i * stride + u * dilation,
                                           j * stride + v * dilation]
                                        * w[co, ci, u, v])
                    y[b, co, i, j] = acc
    return y


def reference_conv1d(x, w, stride=1, dilation=1, groups=1, pad=0):
    """Scalar-loop 1D convolution."""
    n, cin, t = x.shape
    cout, cpg, k = w.shape
    ot = (t + 2 * pad - dilation * (k - 1) - 1) // stride + 1
    xp = np.zeros((n, cin, t + 2 * pad))
    xp[:, :, pad:pad + t] = x
    opg = cout // groups
    y = np.zeros((n, cout, ot))
    for b in range(n):
        for co in range(cout):
            ci0 = (co // opg) * cpg
            for i in range(ot):
                acc = 0.0
                for ci in range(cpg):
                    for u in range(k):
                        acc += (xp[b, ci0 + ci, i * stride + u * dilation]
                                * w[co, ci, u])
                y[b, co, i] = acc
    return y


def central_diff(f, arr, idx, h=1e-5):
    """Two-sided finite difference of scalar f() in arr[idx]."""
    old = arr[idx]
    arr[idx] = old + h
    fp = f()
    arr[idx] = old - h
    fm = f()
    arr[idx] = old
    return (fp - fm) / (2.0 * h)


def rel_err(got, want):
    return abs(got - want) / max(abs(want), 1.0)


def tap_union_coverage(rates, kernel=3, fused=True):
    """Coverage of the maximal receptive-field window by brute-force
    union of the branch tap offsets."""
    half = (kernel - 1) // 2
    taps = set()
    use = rates if fused else [max(rates)]
    for r in use:
        for u in range(-half, half + 1):
            for v in range(-half, half + 1):
                taps.add((u * r, v * r))
    field = (kernel - 1) * max(rates) + 1
    fh = (field - 1) // 2
    inside = {t for t in taps if abs(t[0]) <= fh and abs(t[1]) <= fh}
    return len(inside) / float(field * field)


def logistic_probe_accuracy(x_train, y_train, x_eval, y_eval,
                            steps=300, lr=0.5):
    """Accuracy of a plain logistic regression on flattened pixels."""
    f = x_train.reshape(len(x_train), -1)
    mu, sd = f.mean(axis=0), f.std(axis=0) + 1e-8
    fn = (f - mu) / sd
    w = np.zeros(fn.shape[1])
    b = 0.0
    t = y_train.astype(np.float64)
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(fn @ w + b)))
        g = p - t
        w -= lr * (fn.T @ g) / len(t)
        b -= lr * g.mean()
    fe = (x_eval.reshape(len(x_eval), -1) - mu) / sd
    pred = (fe @ w + b > 0).astype(y_eval.dtype)
    return float((pred == y_eval).mean())


def manual_lstm_gates(z, c):
    """(h, c) from stacked gate pre-activations [n, 4H] and cell state,
    gate order input, forget, cell, output."""
    hd = z.shape[1] // 4
    sig = lambda a: 1.0 / (1.0 + np.exp(-a))
    i, f = sig(z[:, :hd]), sig(z[:, hd:2 * hd])
    g, o = np.tanh(z[:, 2 * hd:3 * hd]), sig(z[:, 3 * hd:])
    c_next = f * c + i * g
    return o * np.tanh(c_next), c_next
