"""Minimal reverse-mode autodiff over float64 numpy arrays.

Only the operations the building blocks need are provided. Every op
returns a ``Var`` whose backward closure accumulates gradient into its
parents; ``Var.backward`` replays the closures in reverse topological
order. Convolutions dispatch through :mod:`espnetv2.backend`, so the
same graphs run on either kernel backend.
"""

import numpy as np

from . import backend
from .errors import ShapeError


class Var:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = tuple(parents) if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed=None):
        if not self.requires_grad:
            raise ValueError("backward() on a Var that requires no grad")
        if seed is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed needs a scalar output")
            seed = np.ones_like(self.data)
        topo = []
        emitted = set()
        on_stack = {id(self)}
        stack = [(self, iter(self._parents))]
        while stack:
            node, it = stack[-1]
            advanced = False
            for p in it:
                if p.requires_grad and id(p) not in emitted and id(p) not in on_stack:
                    stack.append((p, iter(p._parents)))
                    on_stack.add(id(p))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                on_stack.discard(id(node))
                emitted.add(id(node))
                topo.append(node)
        self.accumulate(np.asarray(seed, dtype=np.float64))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Var(shape={self.data.shape}, requires_grad={self.requires_grad})"


def as_var(x):
    return x if isinstance(x, Var) else Var(x)


def param(data):
    return Var(data, requires_grad=True)


def zero_grads(params):
    for p in params:
        p.grad = None


def add(a, b):
    a, b = as_var(a), as_var(b)
    if a.shape != b.shape:
        raise ShapeError(f"add needs equal shapes, got {a.shape} vs {b.shape}")

    def bk(g):
        if a.requires_grad:
            a.accumulate(g)
        if b.requires_grad:
            b.accumulate(g)

    return Var(a.data + b.data, parents=(a, b), backward=bk)


def mul(a, b):
    a, b = as_var(a), as_var(b)
    if a.shape != b.shape:
        raise ShapeError(f"mul needs equal shapes, got {a.shape} vs {b.shape}")

    def bk(g):
        if a.requires_grad:
            a.accumulate(g * b.data)
        if b.requires_grad:
            b.accumulate(g * a.data)

    return Var(a.data * b.data, parents=(a, b), backward=bk)


def scale(a, s: float):
    a = as_var(a)

    def bk(g):
        if a.requires_grad:
            a.accumulate(g * s)

    return Var(a.data * s, parents=(a,), backward=bk)


def reshape(a, shape):
    a = as_var(a)
    old = a.shape

    def bk(g):
        if a.requires_grad:
            a.accumulate(g.reshape(old))

    return Var(a.data.reshape(shape), parents=(a,), backward=bk)


def concat_channels(parts):
    parts = [as_var(p) for p in parts]
    widths = [p.shape[1] for p in parts]
    y = np.concatenate([p.data for p in parts], axis=1)

    def bk(g):
        at = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                p.accumulate(g[:, at:at + w])
            at += w

    return Var(y, parents=tuple(parts), backward=bk)


def slice_channels(a, start, stop):
    a = as_var(a)
    if not (0 <= start < stop <= a.shape[1]):
        raise ShapeError(
            f"channel slice [{start}:{stop}] out of range for {a.shape[1]} channels"
        )

    def bk(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[:, start:stop] = g
            a.accumulate(full)

    return Var(np.ascontiguousarray(a.data[:, start:stop]), parents=(a,), backward=bk)


def conv2d(x, w, stride=1, dilation=1, groups=1, pad=0):
    x, w = as_var(x), as_var(w)
    n, cin, h, wd = x.shape
    kh, kw = w.shape[2], w.shape[3]
    y = backend.conv2d_forward(x.data, w.data, stride, dilation, groups, pad)

    def bk(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.accumulate(backend.conv2d_grad_input(
                g, w.data, cin, h, wd, stride, dilation, groups, pad))
        if w.requires_grad:
            w.accumulate(backend.conv2d_grad_weight(
                x.data, g, kh, kw, stride, dilation, groups, pad))

    return Var(y, parents=(x, w), backward=bk)


def conv1d(x, w, stride=1, dilation=1, groups=1, pad=0):
    x, w = as_var(x), as_var(w)
    n, cin, length = x.shape
    k = w.shape[2]
    y = backend.conv1d_forward(x.data, w.data, stride, dilation, groups, pad)

    def bk(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.accumulate(backend.conv1d_grad_input(
                g, w.data, cin, length, stride, dilation, groups, pad))
        if w.requires_grad:
            w.accumulate(backend.conv1d_grad_weight(
                x.data, g, k, stride, dilation, groups, pad))

    return Var(y, parents=(x, w), backward=bk)


def prelu(x, slopes):
    x, slopes = as_var(x), as_var(slopes)
    if x.ndim < 2 or slopes.data.shape != (x.shape[1],):
        raise ShapeError(
            f"prelu slopes must have shape ({x.shape[1] if x.ndim > 1 else '?'},), "
            f"got {slopes.data.shape}"
        )
    bshape = (1, x.shape[1]) + (1,) * (x.ndim - 2)
    pos = x.data >= 0.0
    y = np.where(pos, x.data, slopes.data.reshape(bshape) * x.data)

    def bk(g):
        if x.requires_grad:
            x.accumulate(np.where(pos, g, slopes.data.reshape(bshape) * g))
        if slopes.requires_grad:
            neg = np.where(pos, 0.0, g * x.data)
            axes = (0,) + tuple(range(2, x.ndim))
            slopes.accumulate(neg.sum(axis=axes))

    return Var(y, parents=(x, slopes), backward=bk)


def batch_norm(x, gamma, beta, running_mean, running_var,
               train, momentum=0.1, eps=1e-5):
    """Returns (y, new_running_mean, new_running_var).

    Train mode uses biased batch statistics (and differentiates through
    them); eval mode is an affine map through the running estimates.
    """
    x, gamma, beta = as_var(x), as_var(gamma), as_var(beta)
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, x.shape[1]) + (1,) * (x.ndim - 2)
    m = x.data.size // x.shape[1]
    if train:
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        new_mean = (1.0 - momentum) * running_mean + momentum * mean
        new_var = (1.0 - momentum) * running_var + momentum * var
    else:
        mean, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(bshape)) * inv.reshape(bshape)
    y = gamma.data.reshape(bshape) * xhat + beta.data.reshape(bshape)

    def bk(g):
        if gamma.requires_grad:
            gamma.accumulate((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate(g.sum(axis=axes))
        if x.requires_grad:
            dxhat = g * gamma.data.reshape(bshape)
            if train:
                s1 = dxhat.sum(axis=axes).reshape(bshape)
                s2 = (dxhat * xhat).sum(axis=axes).reshape(bshape)
                dx = (dxhat - s1 / m - xhat * s2 / m) * inv.reshape(bshape)
            else:
                dx = dxhat * inv.reshape(bshape)
            x.accumulate(dx)

    return Var(y, parents=(x, gamma, beta), backward=bk), new_mean, new_var


def avg_pool_3x3_s2(x):
    """3x3 stride-2 average pooling with same padding, dividing by 9."""
    x = as_var(x)
    n, c, h, wd = x.shape
    kern = np.full((c, 1, 3, 3), 1.0 / 9.0)
    y = backend.conv2d_forward(x.data, kern, 2, 1, c, 1)

    def bk(g):
        if x.requires_grad:
            x.accumulate(backend.conv2d_grad_input(
                np.ascontiguousarray(g), kern, c, h, wd, 2, 1, c, 1))

    return Var(y, parents=(x,), backward=bk)


def global_avg_pool(x):
    x = as_var(x)
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool expects [n, c, h, w], got {x.shape}")
    n, c, h, wd = x.shape

    def bk(g):
        if x.requires_grad:
            x.accumulate(np.broadcast_to(
                g[:, :, None, None] / (h * wd), x.shape).copy())

    return Var(x.data.mean(axis=(2, 3)), parents=(x,), backward=bk)


def linear(x, w, b=None):
    """x [n, f] @ w [f, o] (+ b [o])."""
    x, w = as_var(x), as_var(w)
    y = x.data @ w.data
    parents = [x, w]
    if b is not None:
        b = as_var(b)
        y = y + b.data
        parents.append(b)

    def bk(g):
        if x.requires_grad:
            x.accumulate(g @ w.data.T)
        if w.requires_grad:
            w.accumulate(x.data.T @ g)
        if b is not None and b.requires_grad:
            b.accumulate(g.sum(axis=0))

    return Var(y, parents=tuple(parents), backward=bk)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x):
    x = as_var(x)
    s = _sigmoid(x.data)

    def bk(g):
        if x.requires_grad:
            x.accumulate(g * s * (1.0 - s))

    return Var(s, parents=(x,), backward=bk)


def tanh(x):
    x = as_var(x)
    t = np.tanh(x.data)

    def bk(g):
        if x.requires_grad:
            x.accumulate(g * (1.0 - t * t))

    return Var(t, parents=(x,), backward=bk)


def softmax_cross_entropy(logits, labels):
    """Mean softmax cross-entropy; labels are integer class indices."""
    logits = as_var(logits)
    labels = np.asarray(labels)
    n = logits.shape[0]
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    logp = z - np.log(ez.sum(axis=1, keepdims=True))
    loss = -logp[np.arange(n), labels].mean()

    def bk(g):
        if logits.requires_grad:
            d = p.copy()
            d[np.arange(n), labels] -= 1.0
            logits.accumulate(float(g) * d / n)

    return Var(loss, parents=(logits,), backward=bk)


def sigmoid_binary_cross_entropy(logits, targets):
    """Mean element-wise BCE on sigmoid(logits); targets in [0, 1]."""
    logits = as_var(logits)
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != logits.shape:
        raise ShapeError(f"targets shape {t.shape} != logits shape {logits.shape}")
    z = logits.data
    # log(1 + exp(-|z|)) + max(z, 0) - z*t, the standard stable form
    loss_el = np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0) - z * t
    loss = loss_el.mean()
    s = _sigmoid(z)

    def bk(g):
        if logits.requires_grad:
            logits.accumulate(float(g) * (s - t) / z.size)

    return Var(loss, parents=(logits,), backward=bk)
