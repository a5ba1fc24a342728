"""Central finite-difference check of analytic gradients.

The numerical side only ever calls ``forward_prepared`` and the loss, so it
shares no code with ``backward``.
"""
import numpy as np

from .network import mean_loss

# central differences at h=1e-5 carry ~1e-11 rounding noise, so entries
# smaller than this are held to an absolute 1e-10 instead
REL_FLOOR = 1e-4


def numerical_gradients(model, x, labels, h=1e-5):
    parts = model.prepare(np.asarray(x, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.float64)

    def objective():
        prob, _ = model.forward_prepared(parts)
        return mean_loss(prob, labels)

    grads = {}
    for key, layer in model.trainable_layers().items():
        out = []
        for arr in (layer.weights, layer.biases):
            g = np.empty_like(arr)
            flat, gflat = arr.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up = objective()
                flat[i] = keep - h
                down = objective()
                flat[i] = keep
                gflat[i] = (up - down) / (2.0 * h)
            out.append(g)
        grads[key] = tuple(out)
    return grads


def relative_error(analytic, numeric):
    """Elementwise ``|a - n| / max(|a|, |n|, REL_FLOOR)``."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), REL_FLOOR)


def max_relative_error(model, x, labels, h=1e-5):
    """Largest relative error between ``backward`` and finite differences."""
    prob, cache = model.forward(x)
    analytic = model.backward(cache, labels)
    numeric = numerical_gradients(model, x, labels, h)
    if set(analytic) != set(numeric):
        raise AssertionError(f"gradient keys differ: {sorted(analytic)} vs {sorted(numeric)}")
    worst = 0.0
    for key in numeric:
        for a, n in zip(analytic[key], numeric[key]):
            if a.shape != n.shape:
                raise AssertionError(f"gradient shape mismatch for layer {key!r}")
            if a.size:
                worst = max(worst, float(relative_error(a, n).max()))
    return worst
