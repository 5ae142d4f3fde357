"""Warm-restart learning-rate schedule, SGD, losses, and a desk-scale
training demo.

The cyclic schedule decays linearly from ``eta_max`` within each period
and restarts at the period boundary; every milestone crossed halves the
whole envelope. ``fixed`` mode keeps ``eta_max`` flat and applies only
the milestone halvings, which is the conventional step-decay baseline.

The toy task (oriented bars vs soft blobs, 3x32x32) exists so a real
end-to-end run fits in seconds: forward, loss, backprop through the
fused units, and momentum-SGD updates on every learnable array.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .conv import ConvSpec, out_extent
from .eesp import EespConfig, EespUnit, StridedEesp
from .errors import ConfigError, TrainingDiverged
from .layers import ConvBnAct, Linear
from .network import rates_for_level
from .tensor import make_rng, split_rng

SCHEDULE_MODES = ("cyclic", "fixed")

DEFAULT_MILESTONES = (50, 100, 130, 160, 190, 220, 250, 280)


@dataclass(frozen=True)
class LrSchedule:
    eta_min: float = 0.1
    eta_max: float = 0.5
    period: int = 5
    milestones: tuple = DEFAULT_MILESTONES
    mode: str = "cyclic"

    def __post_init__(self):
        if self.mode not in SCHEDULE_MODES:
            raise ConfigError(f"mode must be one of {SCHEDULE_MODES}, got {self.mode!r}")
        if self.period < 1:
            raise ConfigError(f"period must be >= 1, got {self.period}")
        if self.eta_min < 0 or self.eta_max <= 0:
            raise ConfigError("rates must satisfy eta_min >= 0 and eta_max > 0")
        if self.eta_max - (self.period - 1) * self.eta_min <= 0:
            raise ConfigError(
                "eta_max - (period - 1) * eta_min must stay positive; the "
                "cycle would cross zero")
        ms = tuple(self.milestones)
        if any(m < 0 for m in ms) or list(ms) != sorted(set(ms)):
            raise ConfigError(f"milestones must be strictly increasing and >= 0, got {ms}")
        object.__setattr__(self, "milestones", ms)


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    """Learning rate for an epoch (restarts and halvings included)."""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    if schedule.mode == "cyclic":
        base = schedule.eta_max - (epoch % schedule.period) * schedule.eta_min
    else:
        base = schedule.eta_max
    halvings = sum(1 for m in schedule.milestones if m <= epoch)
    return base * 0.5 ** halvings


def schedule_table(schedule: LrSchedule, epochs: int):
    """Per-epoch rates for epochs 0 .. epochs-1."""
    return [lr_at(schedule, e) for e in range(epochs)]


def sgd_update(param, grad, velocity, lr, momentum=0.9, weight_decay=4e-5):
    """One momentum-SGD step as a pure function; returns (param, velocity)."""
    velocity = momentum * velocity + grad + weight_decay * param
    return param - lr * velocity, velocity


class SGD:
    """Momentum SGD over a parameter list; decay applies to every array."""

    def __init__(self, params, momentum=0.9, weight_decay=4e-5):
        self.params = list(params)
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocities = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        ag.zero_grads(self.params)

    def step(self, lr: float):
        for p, v in zip(self.params, self.velocities):
            if p.grad is None:
                continue
            new_p, new_v = sgd_update(p.data, p.grad, v, lr,
                                      self.momentum, self.weight_decay)
            p.data[...] = new_p
            v[...] = new_v


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy on arrays; returns (loss, dloss/dlogits)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    loss = -float(logp[np.arange(n), labels].mean())
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def binary_cross_entropy(logits, targets):
    """Mean sigmoid cross-entropy on arrays; returns (loss, dloss/dlogits)."""
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    loss = float((np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))).mean())
    sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    return loss, (sig - t) / z.size


def make_toy_dataset(n: int, rng, extent: int = 32):
    """Two-class images: striped bars (warm tint, heavy) vs soft blobs
    (cool tint, light). Both the stripe geometry and the deliberate
    intensity/tint margins separate the classes, so even a linear probe
    on raw pixels can pass while convolutional features stay meaningful.
    Returns (x[n, 3, e, e] float64, y[n] int64).
    """
    if n < 2 or n % 2:
        raise ConfigError(f"need an even n >= 2, got {n}")
    tints = {0: (1.25, 1.0, 0.75), 1: (0.75, 1.0, 1.25)}
    grid = np.arange(extent)
    yy, xx = np.meshgrid(grid, grid, indexing="ij")
    x = np.empty((n, 3, extent, extent))
    y = np.empty(n, dtype=np.int64)
    y[0::2], y[1::2] = 0, 1
    for i in range(n):
        if y[i] == 0:
            amp = rng.uniform(0.9, 1.1)
            phase = int(rng.integers(4))
            axis = yy if rng.integers(2) == 0 else xx
            base = np.where(((axis + phase) // 2) % 2 == 0, amp, 0.0)
        else:
            base = np.zeros((extent, extent))
            for _ in range(int(rng.integers(2, 5))):
                cy, cx = rng.uniform(4, extent - 4, size=2)
                sigma = rng.uniform(2.5, 4.5)
                amp = rng.uniform(0.5, 0.8)
                base += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2)
                                     / (2 * sigma ** 2))
        tint = np.asarray(tints[int(y[i])])
        x[i] = base[None] * tint[:, None, None]
    x += rng.normal(0.0, 0.05, size=x.shape)
    return x, y


class ToyClassifier:
    """Stem conv, one strided unit, one stride-1 unit, pooled linear head."""

    def __init__(self, rng, extent: int = 32, num_classes: int = 2,
                 branches: int = 4, groups: int = 4):
        if isinstance(rng, (int, np.integer)):
            rng = make_rng(int(rng))
        if extent % 4 or extent < 16:
            raise ConfigError(f"extent must be a multiple of 4 and >= 16, got {extent}")
        self.extent = extent
        e1 = out_extent(extent, 3, 2, 1, 1)
        e2 = out_extent(e1, 3, 2, 1, 1)
        rates = rates_for_level(e2, branches)
        self.stem = ConvBnAct(ConvSpec.standard(3, 16, 3, stride=2), rng)
        self.down = StridedEesp(
            EespConfig(16, 32, branches, groups, 3, 2, rates), rng)
        self.unit = EespUnit(
            EespConfig(32, 32, branches, groups, 3, 1, rates), rng)
        self.classifier = Linear(32, num_classes, rng)

    def forward_var(self, x, train=False):
        x = ag.as_var(x)
        v = self.stem(x, train)
        v = self.down(v, image=x, train=train)
        v = self.unit(v, train)
        return self.classifier(ag.global_avg_pool(v))

    def forward(self, x, train=False):
        return self.forward_var(x, train).data

    __call__ = forward

    def parameters(self):
        return (self.stem.parameters() + self.down.parameters()
                + self.unit.parameters() + self.classifier.parameters())


def toy_schedule(mode: str = "cyclic") -> LrSchedule:
    """Schedule scaled down to the toy run's epoch count."""
    return LrSchedule(eta_min=0.02, eta_max=0.1, period=5,
                      milestones=(8,), mode=mode)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    train_size: int = 192
    eval_size: int = 96
    extent: int = 32
    seed: int = 0
    momentum: float = 0.9
    weight_decay: float = 4e-5
    schedule: LrSchedule = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.train_size < 2 or self.eval_size < 2:
            raise ConfigError("train_size and eval_size must be >= 2")


@dataclass
class TrainResult:
    history: list
    final_accuracy: float
    mode: str
    seed: int


def evaluate_accuracy(model, x, y) -> float:
    logits = model.forward(x, train=False)
    return float((logits.argmax(axis=1) == y).mean())


def train_toy(mode: str = "cyclic", config: TrainConfig = None,
              log=None) -> TrainResult:
    """Train the toy classifier end to end; deterministic for a fixed
    config and backend. ``log`` is called with each epoch record."""
    cfg = config or TrainConfig()
    schedule = cfg.schedule or toy_schedule(mode)
    data_rng, eval_rng, model_rng, order_rng = split_rng(make_rng(cfg.seed), 4)
    x_tr, y_tr = make_toy_dataset(cfg.train_size, data_rng, cfg.extent)
    x_ev, y_ev = make_toy_dataset(cfg.eval_size, eval_rng, cfg.extent)
    model = ToyClassifier(model_rng, cfg.extent)
    opt = SGD(model.parameters(), cfg.momentum, cfg.weight_decay)
    history = []
    for epoch in range(cfg.epochs):
        lr = lr_at(schedule, epoch)
        order = order_rng.permutation(cfg.train_size)
        losses = []
        for start in range(0, cfg.train_size, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits = model.forward_var(x_tr[idx], train=True)
            loss = ag.softmax_cross_entropy(logits, y_tr[idx])
            if not np.isfinite(loss.data):
                raise TrainingDiverged(epoch)
            opt.zero_grad()
            loss.backward()
            opt.step(lr)
            losses.append(float(loss.data))
        record = {
            "epoch": epoch,
            "lr": lr,
            "loss": float(np.mean(losses)),
            "accuracy": evaluate_accuracy(model, x_ev, y_ev),
        }
        history.append(record)
        if log is not None:
            log(record)
    return TrainResult(history, history[-1]["accuracy"], schedule.mode, cfg.seed)


def history_to_csv(history) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["epoch", "lr", "loss", "accuracy"])
    writer.writeheader()
    writer.writerows(history)
    return buf.getvalue()
