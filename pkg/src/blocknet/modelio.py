"""``BNMD`` model files.

Layout, little-endian::

    b"BNMD"  u16 version  u8 layer-count
    per layer: u32 input_width  u32 output_width  u8 activation  u8 frozen
               f64 weights (row-major, out x in)  f64 biases

Activation codes: 0 = relu, 1 = sigmoid.
"""
import hashlib
import struct

import numpy as np

from .errors import MagicMismatchError, TruncatedFileError, VersionError
from .network import ACTIVATIONS, DenseLayer, Network

MAGIC = b"BNMD"
VERSION = 1
_HEAD = struct.Struct("<4sHB")
_LAYER = struct.Struct("<IIBB")


def layers_to_bytes(layers):
    if len(layers) > 255:
        raise ValueError("BNMD holds at most 255 layers")
    out = [_HEAD.pack(MAGIC, VERSION, len(layers))]
    for layer in layers:
        out.append(_LAYER.pack(layer.input_width, layer.output_width,
                               ACTIVATIONS.index(layer.activation), int(layer.frozen)))
        out.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        out.append(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())
    return b"".join(out)


def layers_from_bytes(raw, offset=0):
    """Parse a BNMD image starting at ``offset``. Returns ``(layers, end_offset)``."""
    if raw[offset:offset + 4] != MAGIC:
        raise MagicMismatchError(f"not a BNMD image (magic {bytes(raw[offset:offset + 4])!r})")
    if len(raw) < offset + _HEAD.size:
        raise TruncatedFileError("BNMD header truncated")
    _, version, count = _HEAD.unpack_from(raw, offset)
    if version != VERSION:
        raise VersionError(f"unsupported BNMD version {version}")
    pos = offset + _HEAD.size
    layers = []
    for i in range(count):
        if len(raw) < pos + _LAYER.size:
            raise TruncatedFileError(f"layer {i} header truncated")
        n_in, n_out, act, frozen = _LAYER.unpack_from(raw, pos)
        pos += _LAYER.size
        if act >= len(ACTIVATIONS):
            raise MagicMismatchError(f"layer {i}: unknown activation code {act}")
        n_w, n_b = n_in * n_out, n_out
        if len(raw) < pos + 8 * (n_w + n_b):
            raise TruncatedFileError(f"layer {i} parameters truncated")
        w = np.frombuffer(raw, dtype="<f8", count=n_w, offset=pos).reshape(n_out, n_in)
        pos += 8 * n_w
        b = np.frombuffer(raw, dtype="<f8", count=n_b, offset=pos)
        pos += 8 * n_b
        layers.append(DenseLayer(w.astype(np.float64), b.astype(np.float64),
                                 ACTIVATIONS[act], bool(frozen)))
    return layers, pos


def save_model(net, path):
    with open(path, "wb") as f:
        f.write(layers_to_bytes(net.layers))


def load_model(path):
    with open(path, "rb") as f:
        raw = f.read()
    layers, end = layers_from_bytes(raw)
    if end != len(raw):
        raise MagicMismatchError(f"{path}: {len(raw) - end} trailing bytes after BNMD image")
    return Network(layers)


def digest(net):
    """SHA-256 of a network's BNMD serialization."""
    return hashlib.sha256(layers_to_bytes(net.layers)).digest()


def parameter_digest(net):
    """SHA-256 over raw parameter bytes only, ignoring freeze flags."""
    h = hashlib.sha256()
    for layer in net.layers:
        h.update(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())
    return h.digest()
