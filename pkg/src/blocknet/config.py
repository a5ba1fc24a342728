"""Flat ``key=value`` config files (lists comma-separated, ``#`` comments)."""
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

from .block import BlockSpec
from .stimuli import TASKS
from .training import TrainConfig

SCRATCH = "scratch"
BLOCK = "block"
DEFAULT_TEST_SIZE = 10_000
DEFAULT_BASE_TRAIN_SIZE = 35_000


def read_kv(path):
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_kv(path, pairs):
    with open(path, "w") as f:
        for key, value in pairs.items():
            f.write(f"{key}={value}\n")


def _split(value):
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    mode: str
    task: str
    train_size: int
    base_tasks: Tuple[str, ...] = ()
    block_spec: Optional[BlockSpec] = None
    net_spec: Tuple[int, ...] = (200, 100, 50)
    test_size: int = DEFAULT_TEST_SIZE
    repetitions: int = 3
    train_config: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0
    base_models: Tuple[str, ...] = ()  # optional explicit base model paths, one per base task
    base_train_size: int = DEFAULT_BASE_TRAIN_SIZE  # train size of implicitly built bases

    def __post_init__(self):
        self.base_tasks = tuple(self.base_tasks)
        self.net_spec = tuple(self.net_spec)
        self.base_models = tuple(self.base_models)
        if self.block_spec is not None:
            self.block_spec = BlockSpec(*self.block_spec)
        self.validate()

    def validate(self):
        if self.mode not in (SCRATCH, BLOCK):
            raise ValueError(f"mode must be {SCRATCH!r} or {BLOCK!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.train_size < 2 or self.test_size < 1 or self.repetitions < 1:
            raise ValueError("train_size >= 2, test_size >= 1 and repetitions >= 1 required")
        if self.base_train_size < 2:
            raise ValueError("base_train_size must be >= 2")
        if self.mode == BLOCK:
            if self.block_spec is None or not self.base_tasks:
                raise ValueError("block mode needs block_spec and base_tasks")
            self.block_spec.validate()
            unknown = [t for t in self.base_tasks if t not in TASKS]
            if unknown:
                raise ValueError(f"unknown base tasks {unknown}")
            if self.task in self.base_tasks:
                raise ValueError(f"target task {self.task} is also a base task")
            if len(set(self.base_tasks)) != len(self.base_tasks):
                raise ValueError("base tasks repeat")
            if self.base_models and len(self.base_models) != len(self.base_tasks):
                raise ValueError("base_models must list one path per base task")
        elif not self.net_spec:
            raise ValueError("scratch mode needs at least one hidden layer")

    @property
    def arch_name(self):
        if self.mode == BLOCK:
            return self.block_spec.name
        return "NN-" + "-".join(str(w) for w in self.net_spec)

    def to_kv(self):
        kv = {"mode": self.mode, "task": self.task}
        if self.mode == BLOCK:
            kv["base_tasks"] = ",".join(self.base_tasks)
            kv["block_spec"] = ",".join(str(h) for h in self.block_spec)
            if self.base_models:
                kv["base_models"] = ",".join(self.base_models)
            else:
                kv["base_train_size"] = self.base_train_size
        else:
            kv["net_spec"] = ",".join(str(w) for w in self.net_spec)
        kv.update(train_size=self.train_size, test_size=self.test_size,
                  repetitions=self.repetitions, master_seed=self.master_seed)
        for f in fields(TrainConfig):
            if f.name != "seed":
                kv[f.name] = repr(getattr(self.train_config, f.name))
        return kv

    @classmethod
    def from_kv(cls, kv):
        kv = dict(kv)
        tc = {}
        for f in fields(TrainConfig):
            if f.name in kv and f.name != "seed":
                tc[f.name] = f.type(kv.pop(f.name))
        kwargs = {"mode": kv.pop("mode"), "task": kv.pop("task"), "train_size": int(kv.pop("train_size"))}
        if "base_tasks" in kv:
            kwargs["base_tasks"] = _split(kv.pop("base_tasks"))
        if "block_spec" in kv:
            kwargs["block_spec"] = BlockSpec.parse(kv.pop("block_spec"))
        if "net_spec" in kv:
            kwargs["net_spec"] = [int(w) for w in _split(kv.pop("net_spec"))]
        if "base_models" in kv:
            kwargs["base_models"] = _split(kv.pop("base_models"))
        for key in ("test_size", "repetitions", "master_seed", "base_train_size"):
            if key in kv:
                kwargs[key] = int(kv.pop(key))
        if kv:
            raise ValueError(f"unknown config keys: {sorted(kv)}")
        return cls(train_config=TrainConfig(**tc), **kwargs)

    @classmethod
    def load(cls, path):
        return cls.from_kv(read_kv(path))

    def save(self, path):
        write_kv(path, self.to_kv())
