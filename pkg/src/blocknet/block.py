"""Block networks: trainable block neurons wired laterally into frozen base networks.

With base networks ``N_1..N_m`` (same input) and a block ``BA-h1-h2-h3``:

* block layer 1 reads the raw input;
* block layer ``d`` (2 or 3) reads block layer ``d-1`` followed by hidden
  layer ``d-1`` of every base, in base order;
* the sigmoid output reads block layer 3 only.

A zero width removes that block layer, and the next one then reads only the
base activations at its depth. Base output layers and base layer 3 are never
consumed. Only block parameters train.
"""
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BaseDigestMismatchError, MagicMismatchError, TruncatedFileError, VersionError
from .modelio import layers_from_bytes, layers_to_bytes, load_model, parameter_digest
from .network import RELU, SIGMOID, ForwardCache, LayerSpec, Network, activation_grad, dense, init_layer
from .rng import Xoshiro256
from .stimuli import TASK_IDS, TASKS

OUTPUT = 4  # trainable-layer key of the output unit; block layers use their depth


class BlockSpec(NamedTuple):
    h1: int
    h2: int
    h3: int

    @property
    def name(self):
        return f"BA-{self.h1}-{self.h2}-{self.h3}"

    def widths(self):
        return {1: self.h1, 2: self.h2, 3: self.h3}

    @classmethod
    def parse(cls, text):
        """Accepts ``"BA-0-50-50"`` or ``"0,50,50"``."""
        body = text.strip()
        if body.upper().startswith("BA-"):
            parts = body[3:].split("-")
        else:
            parts = body.split(",")
        if len(parts) != 3:
            raise ValueError(f"cannot parse block spec {text!r}")
        return cls(*(int(p) for p in parts))

    def validate(self):
        if min(self) < 0:
            raise ValueError("block widths must be >= 0")
        if self.h3 < 1:
            raise ValueError(f"{self.name}: the top block layer must be non-empty")


@dataclass
class BaseModel:
    network: Network
    task: str


def _check_bases(bases):
    if not bases:
        raise ValueError("a block network needs at least one base model")
    widths = {b.network.input_width for b in bases}
    if len(widths) != 1:
        raise ValueError(f"base models disagree on input width: {sorted(widths)}")
    for b in bases:
        if len(b.network.hidden_widths) < 2:
            raise ValueError(f"base model for {b.task} needs at least 2 hidden layers")


def block_param_count(spec, m, base_widths=(200, 100, 50), input_width=1024):
    """Trainable parameters of ``spec`` over ``m`` identical bases, in closed form."""
    spec = BlockSpec(*spec)
    spec.validate()
    h1, h2, h3 = spec
    total = 0
    if h1:
        total += h1 * (input_width + 1)
    if h2:
        total += h2 * (h1 + m * base_widths[0] + 1)
    total += h3 * (h2 + m * base_widths[1] + 1)
    return total + h3 + 1


class BlockNetwork:
    def __init__(self, bases, spec, layers):
        """``layers`` maps depth (1-3) and ``OUTPUT`` to DenseLayer; see :func:`compose`."""
        self.bases = list(bases)
        self.spec = BlockSpec(*spec)
        self.block = dict(layers)
        for depth, width in self.spec.widths().items():
            if (depth in self.block) != (width > 0):
                raise ValueError(f"block layer {depth} presence does not match {self.spec.name}")
        for depth, layer in self.block.items():
            want = self.input_width if depth == 1 else self._fan_in(depth)
            if layer.input_width != want:
                raise ValueError(f"block layer {depth} expects {want} inputs, has {layer.input_width}")

    def __repr__(self):
        tasks = "+".join(b.task for b in self.bases)
        return f"BlockNetwork({self.spec.name} over {tasks})"

    @property
    def input_width(self):
        return self.bases[0].network.input_width

    @property
    def layers(self):
        """Block layers in depth order, output last (all trainable parameters)."""
        return [self.block[k] for k in sorted(self.block)]

    def trainable_layers(self):
        return {k: l for k, l in self.block.items() if not l.frozen}

    def _base_width(self, k, depth):
        return self.bases[k].network.layers[depth - 1].output_width

    def _fan_in(self, depth):
        if depth == OUTPUT:
            return self.spec.h3
        own = self.spec.widths()[depth - 1]
        return own + sum(self._base_width(k, depth - 1) for k in range(len(self.bases)))

    def input_sources(self, depth):
        """Column ranges of block layer ``depth``'s input: ``[(source, start, stop)]``.

        Sources are ``"input"``, ``"block"`` or ``("base", k)``.
        """
        if depth == 1:
            return [("input", 0, self.input_width)]
        if depth == OUTPUT:
            return [("block", 0, self.spec.h3)]
        out, pos = [], 0
        own = self.spec.widths()[depth - 1]
        if own:
            out.append(("block", 0, own))
            pos = own
        for k in range(len(self.bases)):
            w = self._base_width(k, depth - 1)
            out.append((("base", k), pos, pos + w))
            pos += w
        return out

    def lateral(self, x, chunk=4096):
        """Concatenated base activations at hidden depths 1 and 2.

        Depth-1 activations are only needed (and only computed) when block
        layer 2 exists.
        """
        x = np.asarray(x, dtype=np.float64)
        need = 2
        lat1, lat2 = [], []
        for i in range(0, len(x), chunk):
            xs = x[i:i + chunk]
            per_base = [b.network.hidden_activations(xs, need) for b in self.bases]
            if self.spec.h2:
                lat1.append(np.concatenate([h[0] for h in per_base], axis=1))
            lat2.append(np.concatenate([h[1] for h in per_base], axis=1))
        n = len(x)
        lat1 = np.concatenate(lat1) if lat1 else np.empty((n, 0))
        lat2 = np.concatenate(lat2) if lat2 else np.empty((n, 0))
        return lat1, lat2

    def prepare(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ValueError(f"expected a batch of width {self.input_width}, got shape {x.shape}")
        lat1, lat2 = self.lateral(x)
        raw = x if self.spec.h1 else np.empty((len(x), 0))
        return raw, lat1, lat2

    def forward(self, x):
        return self.forward_prepared(self.prepare(x))

    def predict(self, x, chunk=4096):
        return np.concatenate([self.forward(x[i:i + chunk])[0] for i in range(0, len(x), chunk)])

    def forward_prepared(self, parts):
        raw, lat1, lat2 = parts
        inputs, pre, acts = {}, {}, {}
        prev = None
        for depth, lat in ((1, None), (2, lat1), (3, lat2)):
            if depth not in self.block:
                prev = None
                continue
            if depth == 1:
                inp = raw
            elif prev is None:
                inp = lat
            else:
                inp = np.concatenate([prev, lat], axis=1)
            inputs[depth] = inp
            pre[depth], acts[depth] = dense(self.block[depth], inp)
            prev = acts[depth]
        inputs[OUTPUT] = prev
        pre[OUTPUT], acts[OUTPUT] = dense(self.block[OUTPUT], prev)
        return acts[OUTPUT][:, 0], ForwardCache(inputs, pre, acts)

    def backward(self, cache, labels):
        """Gradients of the mean batch loss for every non-frozen block layer."""
        labels = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
        if cache.acts[OUTPUT].shape != labels.shape or set(cache.pre) != set(self.block):
            raise ValueError("cache does not match this block network and batch")
        grads = {}
        delta = (cache.acts[OUTPUT] - labels) / len(labels)
        key = OUTPUT
        while True:
            layer = self.block[key]
            if not layer.frozen:
                grads[key] = (delta.T @ cache.inputs[key], delta.sum(axis=0))
            below = 3 if key == OUTPUT else key - 1
            if below < 1 or below not in self.block:
                break
            own = self.block[below].output_width
            delta = (delta @ layer.weights[:, :own]) * activation_grad(
                cache.pre[below], cache.acts[below], self.block[below].activation)
            key = below
        # a block layer 1 under a removed layer 2 feeds nothing
        for depth in self.block:
            if depth not in grads and not self.block[depth].frozen:
                layer = self.block[depth]
                grads[depth] = (np.zeros_like(layer.weights), np.zeros_like(layer.biases))
        return grads

    def base_digests(self):
        return [parameter_digest(b.network) for b in self.bases]


def compose(bases, spec, seed):
    """Freeze ``bases`` and attach a freshly initialised block ``spec`` to them."""
    bases = [b if isinstance(b, BaseModel) else BaseModel(*b) for b in bases]
    _check_bases(bases)
    spec = BlockSpec(*spec)
    spec.validate()
    frozen = [BaseModel(b.network.frozen(), b.task) for b in bases]
    rng = Xoshiro256(seed)
    shell = BlockNetwork.__new__(BlockNetwork)
    shell.bases, shell.spec = frozen, spec
    layers = {}
    for depth, width in spec.widths().items():
        if width:
            fan_in = shell.input_width if depth == 1 else shell._fan_in(depth)
            layers[depth] = init_layer(LayerSpec(fan_in, width, RELU), rng)
    layers[OUTPUT] = init_layer(LayerSpec(spec.h3, 1, SIGMOID), rng)
    return BlockNetwork(frozen, spec, layers)


def train_block(bn, x, labels, config):
    """Train the block neurons only; raises if any base parameter changed."""
    from .training import train

    before = bn.base_digests()
    bn, log = train(bn, x, labels, config)
    if bn.base_digests() != before:
        raise AssertionError("base model parameters changed during block training")
    return bn, log


# --- block model files --------------------------------------------------------
# b"BNBK" u16 version  u32 h1 u32 h2 u32 h3  u8 base-count
# per base: u8 task-id, 32-byte SHA-256 of its parameters
# followed by a complete BNMD image of the block layers (depth order, output last)

BLOCK_MAGIC = b"BNBK"
BLOCK_VERSION = 1
_BHEAD = struct.Struct("<4sHIIIB")
_BBASE = struct.Struct("<B32s")


def block_to_bytes(bn):
    out = [_BHEAD.pack(BLOCK_MAGIC, BLOCK_VERSION, *bn.spec, len(bn.bases))]
    for b, d in zip(bn.bases, bn.base_digests()):
        out.append(_BBASE.pack(TASK_IDS.get(b.task, 255), d))
    out.append(layers_to_bytes(bn.layers))
    return b"".join(out)


def save_block(bn, path):
    with open(path, "wb") as f:
        f.write(block_to_bytes(bn))


def read_block_header(raw):
    if raw[:4] != BLOCK_MAGIC:
        raise MagicMismatchError(f"not a block model (magic {bytes(raw[:4])!r})")
    if len(raw) < _BHEAD.size:
        raise TruncatedFileError("block header truncated")
    _, version, h1, h2, h3, m = _BHEAD.unpack_from(raw)
    if version != BLOCK_VERSION:
        raise VersionError(f"unsupported block model version {version}")
    pos = _BHEAD.size
    entries = []
    for _ in range(m):
        if len(raw) < pos + _BBASE.size:
            raise TruncatedFileError("base digest list truncated")
        task_id, d = _BBASE.unpack_from(raw, pos)
        entries.append((TASKS[task_id] if task_id < len(TASKS) else None, d))
        pos += _BBASE.size
    return BlockSpec(h1, h2, h3), entries, pos


def load_block(path, bases):
    """Rebuild a block network on ``bases``, checking each against the stored digest."""
    with open(path, "rb") as f:
        raw = f.read()
    spec, entries, pos = read_block_header(raw)
    bases = [b if isinstance(b, BaseModel) else BaseModel(*b) for b in bases]
    if len(bases) != len(entries):
        raise BaseDigestMismatchError(f"block was trained on {len(entries)} bases, got {len(bases)}")
    for k, (b, (task, d)) in enumerate(zip(bases, entries)):
        if parameter_digest(b.network) != d:
            raise BaseDigestMismatchError(f"base {k} ({b.task}) differs from the one trained with ({task})")
    layers, _ = layers_from_bytes(raw, pos)
    keys = [d for d in (1, 2, 3) if spec.widths()[d]] + [OUTPUT]
    if len(layers) != len(keys):
        raise MagicMismatchError("block layer count does not match its spec")
    frozen = [BaseModel(b.network.frozen(), b.task) for b in bases]
    return BlockNetwork(frozen, spec, dict(zip(keys, layers)))


# --- composition descriptors --------------------------------------------------

def write_descriptor(path, spec, base_paths, seed, base_tasks=None):
    """Text ``key=value`` file naming a block spec, its base model files and a seed."""
    lines = [f"block_spec={','.join(str(h) for h in BlockSpec(*spec))}",
             f"bases={','.join(str(p) for p in base_paths)}"]
    if base_tasks:
        lines.append(f"base_tasks={','.join(base_tasks)}")
    lines.append(f"seed={int(seed)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_descriptor(path):
    from .config import read_kv

    kv = read_kv(path)
    spec = BlockSpec.parse(kv["block_spec"])
    paths = [p for p in kv["bases"].split(",") if p]
    tasks = [t for t in kv.get("base_tasks", "").split(",") if t] or [None] * len(paths)
    return spec, paths, tasks, int(kv.get("seed", 0))


def compose_from_descriptor(path):
    spec, paths, tasks, seed = read_descriptor(path)
    bases = []
    for p, t in zip(paths, tasks):
        bases.append(BaseModel(load_model(p), t))
    return compose(bases, spec, seed)
