"""Mini-batch SGD with momentum, plateau decay and early stopping."""
import csv
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DivergenceError
from .network import mean_loss
from .rng import mix_seed

_SPLIT_STREAM = 1
_SHUFFLE_STREAM = 2


@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    momentum: float = 0.9
    batch_size: int = 128
    max_epochs: int = 150
    validation_fraction: float = 0.1
    patience: int = 20
    seed: int = 0
    lr_decay: float = 0.5
    plateau_epochs: int = 5  # epochs without improvement before each decay

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if not 0.0 < self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in (0, 0.5]")
        if self.patience < 0 or self.plateau_epochs < 1:
            raise ValueError("patience must be >= 0 and plateau_epochs >= 1")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_error_pct: float
    lr: float


@dataclass
class TrainLog:
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_error_pct: float = math.inf

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "train_loss", "val_error_pct", "lr"])
            for r in self.epochs:
                w.writerow([r.epoch, repr(r.train_loss), repr(r.val_error_pct), repr(r.lr)])


def sgd_step(model, grads, velocity, config, lr=None):
    """One momentum update, in place: ``v = momentum*v - lr*g; theta += v``.

    ``velocity`` maps the same keys as ``grads`` to ``(vW, vb)`` and is
    created on first use. Returns ``(model, velocity)``.
    """
    lr = config.learning_rate if lr is None else lr
    layers = model.trainable_layers()
    for key, (gw, gb) in grads.items():
        if key not in layers:
            raise ValueError(f"gradient for frozen or unknown layer {key!r}")
        layer = layers[key]
        if gw.shape != layer.weights.shape or gb.shape != layer.biases.shape:
            raise ValueError(f"gradient shape mismatch for layer {key!r}")
        if key not in velocity:
            velocity[key] = (np.zeros_like(gw), np.zeros_like(gb))
        vw, vb = velocity[key]
        vw *= config.momentum
        vw -= lr * gw
        vb *= config.momentum
        vb -= lr * gb
        layer.weights += vw
        layer.biases += vb
    return model, velocity


def _take(parts, idx):
    return tuple(p[idx] for p in parts)


def _validation(model, parts, labels, chunk=4096):
    """Error percentage and mean loss on held-out data."""
    wrong, total = 0, 0.0
    for i in range(0, len(labels), chunk):
        prob, _ = model.forward_prepared(_take(parts, slice(i, i + chunk)))
        y = labels[i:i + chunk]
        wrong += int(np.count_nonzero((prob >= 0.5) != (y == 1)))
        total += mean_loss(prob, y) * len(y)
    return 100.0 * wrong / len(labels), total / len(labels)


def split_indices(n, config):
    rng = np.random.default_rng(mix_seed(config.seed, _SPLIT_STREAM))
    perm = rng.permutation(n)
    n_val = max(1, int(round(config.validation_fraction * n)))
    if n - n_val < 1:
        raise ValueError("training set too small to hold out a validation split")
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train(model, x, labels, config):
    """Train ``model`` in place and return ``(model, log)``.

    A ``validation_fraction`` share of the data is held out. The learning rate
    is multiplied by ``lr_decay`` after every ``plateau_epochs`` epochs without
    improvement; training stops after ``patience + 1`` such epochs (or
    ``max_epochs``) and restores the best-validation weights. An epoch improves
    when its validation error is lower, or equal with a lower validation loss.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if len(labels) == 0:
        raise ValueError("empty training set")
    parts = model.prepare(np.asarray(x, dtype=np.float64))
    train_idx, val_idx = split_indices(len(labels), config)
    train_parts, train_y = _take(parts, train_idx), labels[train_idx]
    val_parts, val_y = _take(parts, val_idx), labels[val_idx]
    del parts

    layers = model.trainable_layers()
    velocity = {}
    lr = config.learning_rate
    log = TrainLog()
    best = {k: (l.weights.copy(), l.biases.copy()) for k, l in layers.items()}
    best_key = (math.inf, math.inf)
    stale = 0
    n = len(train_y)
    for epoch in range(1, config.max_epochs + 1):
        order = np.random.default_rng(mix_seed(config.seed, _SHUFFLE_STREAM, epoch)).permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch_y = train_y[idx]
            prob, cache = model.forward_prepared(_take(train_parts, idx))
            total += mean_loss(prob, batch_y) * len(idx)
            sgd_step(model, model.backward(cache, batch_y), velocity, config, lr)
        train_loss = total / n
        if not math.isfinite(train_loss):
            raise DivergenceError(epoch, train_loss)
        val_err, val_loss = _validation(model, val_parts, val_y)
        log.epochs.append(EpochRecord(epoch, train_loss, val_err, lr))
        if (val_err, val_loss) < best_key:
            best_key = (val_err, val_loss)
            log.best_val_error_pct = val_err
            log.best_epoch = epoch
            best = {k: (l.weights.copy(), l.biases.copy()) for k, l in layers.items()}
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
            if stale % config.plateau_epochs == 0:
                lr *= config.lr_decay
    for k, layer in layers.items():
        layer.weights[...] = best[k][0]
        layer.biases[...] = best[k][1]
    return model, log
