"""Randomised self-checks behind ``blocknet verify``.

Each check returns ``(name, ok, detail)``. The same toy builders are used by
the test suite.
"""
import itertools

import numpy as np

from .block import BaseModel, BlockSpec, block_param_count, compose, train_block
from .gradcheck import max_relative_error
from .modelio import parameter_digest
from .network import mlp, param_count
from .training import TrainConfig

TOY_WIDTH = 6
TOY_BASE = (5, 4, 3)


def jitter_biases(layers, rs, scale=0.1):
    # zero biases leave dead ReLU units exactly on the kink, where the
    # finite difference straddles two slopes
    for layer in layers:
        layer.biases[:] = rs.normal(0.0, scale, layer.biases.shape)


def clear_of_kinks(model, x, margin=1e-3):
    """True when no pre-activation lies within ``margin`` of zero.

    A step of 1e-5 in one weight moves pre-activations by about that much, so
    inputs this close to a ReLU kink give one-sided finite differences.
    """
    _, cache = model.forward(x)
    pre = cache.pre.values() if isinstance(cache.pre, dict) else cache.pre
    return all(np.abs(z).min() > margin for z in pre if z.size)


def _batch(model, rs, draw):
    while True:
        x = draw()
        if clear_of_kinks(model, x):
            return x, rs.integers(0, 2, len(x))


def random_plain(seed, max_width=16):
    """A small MLP with jittered biases plus a batch to check it on."""
    rs = np.random.default_rng(seed)
    width = int(rs.integers(2, max_width + 1))
    depth = int(rs.integers(1, 4))
    hidden = tuple(int(h) for h in rs.integers(1, max_width + 1, size=depth))
    net = mlp(hidden, width, seed=seed)
    jitter_biases(net.layers, rs)
    rows = int(rs.integers(1, 6))
    return (net, *_batch(net, rs, lambda: rs.normal(size=(rows, width))))


def toy_bases(m, seed, width=TOY_WIDTH, hidden=TOY_BASE):
    rs = np.random.default_rng(seed)
    bases = []
    for k in range(m):
        net = mlp(hidden, width, seed=seed * 31 + k)
        jitter_biases(net.layers, rs, 0.3)
        bases.append(BaseModel(net, f"toy{k}"))
    return bases


def random_composition(seed, max_block=4):
    """A block network over 1-3 toy bases with a random (possibly layer-removed) spec."""
    rs = np.random.default_rng(seed)
    m = int(rs.integers(1, 4))
    h1, h2 = (int(h) for h in rs.integers(0, max_block + 1, size=2))
    spec = BlockSpec(h1, h2, int(rs.integers(1, max_block + 1)))
    bn = compose(toy_bases(m, seed), spec, seed)
    jitter_biases(bn.layers, rs)
    rows = int(rs.integers(2, 6))
    return (bn, *_batch(bn, rs, lambda: rs.uniform(size=(rows, TOY_WIDTH))))


def check_gradients(networks=50, compositions=20, tol=1e-6):
    worst_net = max(max_relative_error(*random_plain(s)) for s in range(networks))
    worst_block = max(max_relative_error(*random_composition(s)) for s in range(compositions))
    worst = max(worst_net, worst_block)
    detail = f"max rel err {worst_net:.2e} over {networks} nets, {worst_block:.2e} over {compositions} blocks"
    return "gradient exactness", worst < tol, detail


def check_parameter_counts():
    anchors = {
        "NN-60-40-20": (param_count(mlp((60, 40, 20), seed=0)), 64_781),
        "BA-0-50-50 m=4": (block_param_count((0, 50, 50), 4), 62_651),
        "BA-0-50-50 m=5": (block_param_count((0, 50, 50), 5), 77_651),
        "BA-0-0-50 m=5": (block_param_count((0, 0, 50), 5), 25_101),
    }
    bad = [f"{k}: {got} != {want}" for k, (got, want) in anchors.items() if got != want]
    widths = (7, 5, 4)
    for m in range(1, 6):
        bases = [BaseModel(mlp(widths, 9, seed=k), str(k)) for k in range(m)]
        for spec in itertools.product((0, 1, 50), repeat=3):
            if spec[2] == 0:
                continue
            bn = compose(bases, spec, seed=m)
            counted = sum(l.size for l in bn.trainable_layers().values())
            if counted != block_param_count(spec, m, widths, 9):
                bad.append(f"{BlockSpec(*spec).name} m={m}: enumerated {counted}")
    return "parameter counts", not bad, "; ".join(bad) or "anchors and enumeration agree"


def check_freeze(runs=5):
    changed = 0
    for seed in range(runs):
        rs = np.random.default_rng(seed)
        bn = compose(toy_bases(2, seed), BlockSpec(0, 3, 2), seed)
        before = bn.base_digests()
        x = rs.uniform(size=(80, TOY_WIDTH))
        y = (x[:, 0] > x[:, 1]).astype(float)
        try:
            train_block(bn, x, y, TrainConfig(learning_rate=0.1, max_epochs=4, batch_size=8, seed=seed))
        except AssertionError:
            changed += 1
            continue
        changed += [parameter_digest(b.network) for b in bn.bases] != before
    return "freeze law", changed == 0, f"{runs} block trainings, {changed} digest changes"


def run_all():
    return [check_parameter_counts(), check_freeze(), check_gradients()]
