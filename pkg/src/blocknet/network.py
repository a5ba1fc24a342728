"""Dense feed-forward networks with a single sigmoid output unit.

Arrays are float64 and row-major: a batch is ``(k, input_width)`` and each
layer computes ``act(x @ W.T + b)`` with ``W`` of shape ``(out, in)``.

Anything that trains through :func:`blocknet.training.train` follows the
same small protocol as :class:`Network`: ``prepare``, ``forward_prepared``,
``backward`` and ``trainable_layers``.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .rng import Xoshiro256

RELU = "relu"
SIGMOID = "sigmoid"
ACTIVATIONS = (RELU, SIGMOID)
LOSS_CLAMP = 1e-12


@dataclass(frozen=True)
class LayerSpec:
    input_width: int
    output_width: int
    activation: str = RELU

    def __post_init__(self):
        if self.input_width < 1 or self.output_width < 1:
            raise ValueError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = RELU
    frozen: bool = False

    @property
    def input_width(self):
        return self.weights.shape[1]

    @property
    def output_width(self):
        return self.weights.shape[0]

    @property
    def size(self):
        return self.weights.size + self.biases.size

    def spec(self):
        return LayerSpec(self.input_width, self.output_width, self.activation)

    def frozen_copy(self):
        """A frozen view sharing this layer's arrays."""
        return DenseLayer(self.weights, self.biases, self.activation, frozen=True)


def sigmoid(z):
    # split by sign so large |z| never overflows exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(z, activation):
    if activation == RELU:
        return np.maximum(z, 0.0)
    return sigmoid(z)


def activation_grad(z, a, activation):
    if activation == RELU:
        return (z > 0.0).astype(z.dtype)
    return a * (1.0 - a)


def dense(layer, x):
    z = x @ layer.weights.T + layer.biases
    return z, activate(z, layer.activation)


class ForwardCache:
    """Inputs, pre-activations and activations of one forward pass."""

    def __init__(self, inputs, pre, acts):
        self.inputs = inputs
        self.pre = pre
        self.acts = acts


def loss(prob, label):
    """Binary cross-entropy with the probability clamped away from 0 and 1."""
    p = np.clip(prob, LOSS_CLAMP, 1.0 - LOSS_CLAMP)
    return -label * np.log(p) - (1.0 - label) * np.log(1.0 - p)


def mean_loss(prob, labels):
    return float(np.mean(loss(np.asarray(prob), np.asarray(labels, dtype=np.float64))))


class Network:
    def __init__(self, layers: List[DenseLayer]):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.output_width != nxt.input_width:
                raise ValueError(
                    f"layer widths do not chain: {prev.output_width} -> {nxt.input_width}")
        last = layers[-1]
        if last.output_width != 1 or last.activation != SIGMOID:
            raise ValueError("the final layer must be a single sigmoid unit")
        self.layers = list(layers)

    @property
    def input_width(self):
        return self.layers[0].input_width

    @property
    def hidden_widths(self):
        return tuple(layer.output_width for layer in self.layers[:-1])

    def __repr__(self):
        widths = "-".join(str(w) for w in self.hidden_widths)
        return f"Network(NN-{widths}, input_width={self.input_width})"

    def trainable_layers(self):
        return {i: layer for i, layer in enumerate(self.layers) if not layer.frozen}

    def frozen(self):
        """A fully frozen network sharing this one's parameter arrays."""
        return Network([layer.frozen_copy() for layer in self.layers])

    def prepare(self, x):
        return (x,)

    def forward(self, x):
        """Return ``(probabilities of shape (k,), cache)`` for a batch."""
        return self.forward_prepared(self.prepare(np.asarray(x, dtype=np.float64)))

    def forward_prepared(self, parts):
        (x,) = parts
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ValueError(f"expected a batch of width {self.input_width}, got shape {x.shape}")
        pre, acts = [], [x]
        a = x
        for layer in self.layers:
            z, a = dense(layer, a)
            pre.append(z)
            acts.append(a)
        return a[:, 0], ForwardCache([x], pre, acts)

    def hidden_activations(self, x, depth):
        """Post-activation outputs of the first ``depth`` hidden layers."""
        out = []
        a = np.asarray(x, dtype=np.float64)
        for layer in self.layers[:depth]:
            a = activate(a @ layer.weights.T + layer.biases, layer.activation)
            out.append(a)
        return out

    def predict(self, x, chunk=4096):
        x = np.asarray(x)
        return np.concatenate([self.forward(x[i:i + chunk])[0] for i in range(0, len(x), chunk)])

    def backward(self, cache, labels):
        """Gradients of the mean batch loss, keyed by layer index.

        Frozen layers get no entry; propagation stops below the lowest
        trainable layer.
        """
        labels = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
        if len(cache.pre) != len(self.layers) or cache.acts[-1].shape != labels.shape:
            raise ValueError("cache does not match this network and batch")
        trainable = [i for i, layer in enumerate(self.layers) if not layer.frozen]
        grads = {}
        if not trainable:
            return grads
        lowest = trainable[0]
        delta = (cache.acts[-1] - labels) / len(labels)
        for i in range(len(self.layers) - 1, lowest - 1, -1):
            layer = self.layers[i]
            if not layer.frozen:
                grads[i] = (delta.T @ cache.acts[i], delta.sum(axis=0))
            if i > lowest:
                below = self.layers[i - 1]
                delta = (delta @ layer.weights) * activation_grad(cache.pre[i - 1], cache.acts[i], below.activation)
        return grads


def mlp_specs(hidden: Sequence[int], input_width=1024, activation=RELU):
    widths = [input_width, *hidden]
    specs = [LayerSpec(a, b, activation) for a, b in zip(widths, widths[1:])]
    specs.append(LayerSpec(widths[-1], 1, SIGMOID))
    return specs


def init_layer(spec, rng):
    bound = np.sqrt(6.0 / (spec.input_width + spec.output_width))
    u = rng.random_array(spec.output_width * spec.input_width)
    weights = ((2.0 * u - 1.0) * bound).reshape(spec.output_width, spec.input_width)
    return DenseLayer(weights, np.zeros(spec.output_width), spec.activation)


def init_network(specs: Sequence[LayerSpec], seed):
    """Fan-balanced uniform weights in ``+-sqrt(6/(fan_in+fan_out))``, zero biases."""
    for prev, nxt in zip(specs, specs[1:]):
        if prev.output_width != nxt.input_width:
            raise ValueError(f"layer specs do not chain: {prev.output_width} -> {nxt.input_width}")
    rng = Xoshiro256(seed)
    return Network([init_layer(s, rng) for s in specs])


def mlp(hidden, input_width=1024, seed=0):
    """``mlp((200, 100, 50))`` is NN-200-100-50 over 32x32 images."""
    return init_network(mlp_specs(hidden, input_width), seed)


def param_count(net):
    """Parameters (weights and biases) held in ``net.layers``."""
    return sum(layer.output_width * (layer.input_width + 1) for layer in net.layers)


def evaluate(net, x, labels, chunk=4096):
    """Misclassification percentage; probability 0.5 counts as class 1."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("cannot evaluate on an empty set")
    wrong = 0
    for i in range(0, len(labels), chunk):
        prob, _ = net.forward(x[i:i + chunk])
        wrong += int(np.count_nonzero((prob >= 0.5) != (labels[i:i + chunk] == 1)))
    return 100.0 * wrong / len(labels)
