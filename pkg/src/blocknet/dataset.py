"""Labelled stimulus datasets and the ``BNDS`` file format.

Images are stored quantized to 8 bits (``floor(v*255 + 0.5)``); networks
consume ``pixels / 255``.

File layout, little-endian::

    b"BNDS"  u16 version  u8 task-id  u64 count  u64 seed
    count x ( u8 label, 1024 x u8 pixel )
"""
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GenerationError, MagicMismatchError, TruncatedFileError, VersionError
from .rng import MASK64, Xoshiro256
from .stimuli import TASK_IDS, TASKS, gen_spec, rasterize

MAGIC = b"BNDS"
VERSION = 1
IMAGE_SIZE = 32 * 32
_HEADER = struct.Struct("<4sHBQQ")
_SHUFFLE_STREAM = MASK64  # stream index reserved for the shuffle


@dataclass(eq=False)
class Dataset:
    task: str
    seed: int
    images: np.ndarray  # (n, 1024) uint8
    labels: np.ndarray  # (n,) uint8

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.task == other.task and self.seed == other.seed
                and np.array_equal(self.images, other.images)
                and np.array_equal(self.labels, other.labels))

    def features(self, idx=None):
        """Pixels as float64 in [0, 1]."""
        pix = self.images if idx is None else self.images[idx]
        return pix.astype(np.float64) / 255.0

    def targets(self, idx=None):
        lab = self.labels if idx is None else self.labels[idx]
        return lab.astype(np.float64)


def quantize(img):
    return np.floor(np.asarray(img, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)


def make_example(task, seed, index):
    """Example ``index`` of the unshuffled sequence: label ``index % 2``."""
    label = index % 2
    rng = Xoshiro256.derive(seed, index)
    try:
        spec = gen_spec(task, label, rng)
    except GenerationError as exc:
        raise GenerationError(f"example {index}: {exc}") from exc
    return quantize(rasterize(spec, rng)).reshape(-1), label


def _make_range(task, seed, start, stop):
    images = np.empty((stop - start, IMAGE_SIZE), dtype=np.uint8)
    labels = np.empty(stop - start, dtype=np.uint8)
    for k, i in enumerate(range(start, stop)):
        images[k], labels[k] = make_example(task, seed, i)
    return images, labels


def build_dataset(task, n, seed, workers=1):
    """Generate ``n`` balanced examples of ``task``.

    Example ``i`` draws from its own stream ``(seed, i)``, so the result does
    not depend on ``workers``. Labels alternate 0, 1, 0, ... before a seeded
    shuffle, giving ``ceil(n/2)`` zeros.
    """
    if task not in TASK_IDS:
        raise ValueError(f"unknown task {task!r}")
    if n < 2:
        raise ValueError("a dataset needs at least 2 examples")
    seed = int(seed) & MASK64
    if workers <= 1:
        images, labels = _make_range(task, seed, 0, n)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_make_range, [task] * workers, [seed] * workers,
                                  bounds[:-1].tolist(), bounds[1:].tolist()))
        images = np.concatenate([p[0] for p in parts])
        labels = np.concatenate([p[1] for p in parts])
    perm = Xoshiro256.derive(seed, _SHUFFLE_STREAM).permutation(n)
    return Dataset(task, seed, images[perm], labels[perm])


def write_dataset(dataset, path):
    n = len(dataset)
    body = np.empty((n, 1 + IMAGE_SIZE), dtype=np.uint8)
    body[:, 0] = dataset.labels
    body[:, 1:] = dataset.images
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, TASK_IDS[dataset.task], n, dataset.seed & MASK64))
        f.write(body.tobytes())


def read_dataset(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise MagicMismatchError(f"{path}: not a BNDS file (magic {raw[:4]!r})")
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(f"{path}: header truncated")
    _, version, task_id, n, seed = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionError(f"{path}: unsupported BNDS version {version}")
    if task_id >= len(TASKS):
        raise FormatError(f"{path}: unknown task id {task_id}")
    expected = _HEADER.size + n * (1 + IMAGE_SIZE)
    if len(raw) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype=np.uint8, count=n * (1 + IMAGE_SIZE), offset=_HEADER.size)
    body = body.reshape(n, 1 + IMAGE_SIZE)
    return Dataset(TASKS[task_id], seed, body[:, 1:].copy(), body[:, 0].copy())
