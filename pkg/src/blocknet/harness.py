"""Experiment orchestration: cached datasets, base models, repetitions, tables and sweeps.

Everything lives under one workspace directory::

    data/<task>-n<count>-s<seed>.bnds
    runs/<arch>-<task>-n<count>-<key>/rep<k>.{bnmd,bnbk,log.csv,txt}

A run directory is keyed by a hash of the experiment config (minus the
repetition count), so repetition ``k`` is shared by every experiment that
asks for it. Base model for task ``T`` at train size ``n`` is repetition 0 of
the scratch NN-200-100-50 run on ``T`` with ``n`` examples.
"""
import csv
import hashlib
import itertools
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .block import BaseModel, BlockSpec, compose, save_block, train_block
from .config import BLOCK, DEFAULT_TEST_SIZE, SCRATCH, ExperimentConfig, read_kv, write_kv
from .dataset import build_dataset, read_dataset, write_dataset
from .modelio import load_model, save_model
from .network import evaluate, mlp, param_count
from .rng import Xoshiro256, mix_seed
from .stimuli import TASK_IDS, TASKS
from .training import TrainConfig, train

log = logging.getLogger(__name__)

TEST_SALT = 0x7E57
FIG3_SALT = 0xF163
PAPER_TRAIN_SIZE = {1: 350_000, 2: 200_000, 3: 200_000}
DESK_SCALE = 0.1
BASE_NET = (200, 100, 50)
SCRATCH_ARCHS = ((200, 100, 50), (60, 40, 20))
BLOCK_ARCHS = (BlockSpec(0, 50, 50), BlockSpec(0, 0, 50))

# (target, bases) in the order the rows are printed; rows 2/3 and 8/9 list
# the same base sets in a different order and are kept as separate rows
TABLE2_ROWS = (
    ("ang_crs", ("ang_tri_ln", "crs_ncrs", "blt_srp", "blt_srp_ln")),
    ("ang_crs", ("ang_tri_ln", "ang_crs_ln", "crs_ncrs", "blt_srp_ln")),
    ("ang_crs", ("ang_tri_ln", "crs_ncrs", "blt_srp_ln", "ang_crs_ln")),
    ("ang_crs_ln", ("ang_tri_ln", "crs_ncrs", "blt_srp_ln", "ang_crs")),
    ("ang_crs_ln", ("ang_tri_ln", "crs_ncrs", "blt_srp", "blt_srp_ln")),
    ("blt_srp", ("ang_crs", "ang_tri_ln", "crs_ncrs", "blt_srp_ln")),
    ("blt_srp", ("ang_crs_ln", "ang_tri_ln", "crs_ncrs", "ang_crs")),
    ("blt_srp_ln", ("ang_crs_ln", "ang_tri_ln", "crs_ncrs", "ang_crs")),
    ("blt_srp_ln", ("ang_crs", "ang_tri_ln", "crs_ncrs", "ang_crs_ln")),
)
TABLE3_TARGETS = ("ang_crs", "ang_crs_ln", "blt_srp", "blt_srp_ln", "crs_ncrs", "ang_tri_ln")


def scaled(size, scale):
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    return max(2, int(round(scale * size)))


def dataset_seed(master, task):
    return mix_seed(master, TASK_IDS[task])


def test_seed(master, task):
    return mix_seed(master, TASK_IDS[task], TEST_SALT)


def rep_seed(master, rep):
    return mix_seed(master, rep)


def check_admissible(task, base_tasks):
    if task in base_tasks:
        raise ValueError(f"block trained on {task} would reuse a base trained on it")


@dataclass
class ExperimentResult:
    task: str
    arch: str
    errors: Tuple[float, ...]
    params: int
    seconds: float
    base_tasks: Tuple[str, ...] = ()

    @property
    def best(self):
        return min(self.errors)

    @property
    def worst(self):
        return max(self.errors)

    @property
    def mean(self):
        # clamp guards the last-ulp drift of a mean of identical values
        return min(max(math.fsum(self.errors) / len(self.errors), self.best), self.worst)

    def cell(self):
        return f"{self.mean:.1f}({self.best:.1f}-{self.worst:.1f})"


class Workspace:
    def __init__(self, root, master_seed=0, test_size=DEFAULT_TEST_SIZE, workers=1):
        self.root = os.fspath(root)
        self.master_seed = master_seed
        self.test_size = test_size
        self.workers = max(1, workers)
        os.makedirs(self.root, exist_ok=True)

    def path(self, *parts):
        p = os.path.join(self.root, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        return p

    def dataset(self, task, n, seed):
        path = self.path("data", f"{task}-n{n}-s{seed:016x}.bnds")
        if os.path.exists(path):
            return read_dataset(path)
        log.info("generating %d %s examples", n, task)
        ds = build_dataset(task, n, seed, workers=self.workers)
        _atomic(path, lambda p: write_dataset(ds, p))
        return ds

    def train_set(self, task, n, master=None):
        return self.dataset(task, n, dataset_seed(self.master_seed if master is None else master, task))

    def test_set(self, task, master=None, size=None):
        master = self.master_seed if master is None else master
        return self.dataset(task, size or self.test_size, test_seed(master, task))

    def run_dir(self, config):
        kv = config.to_kv()
        kv.pop("repetitions")
        text = "\n".join(f"{k}={v}" for k, v in kv.items())
        key = hashlib.sha256(text.encode()).hexdigest()[:12]
        name = f"{config.arch_name}-{config.task}-n{config.train_size}-{key}"
        return self.path("runs", name, "")

    def base_config(self, task, config):
        return ExperimentConfig(SCRATCH, task, config.base_train_size, net_spec=BASE_NET,
                                test_size=config.test_size, repetitions=1,
                                train_config=config.train_config, master_seed=config.master_seed)

    def base_model(self, task, config):
        """Base for ``task`` under the data and training settings of ``config``."""
        base_cfg = self.base_config(task, config)
        path = os.path.join(self.run_dir(base_cfg), "rep0.bnmd")
        if not os.path.exists(path):
            run_repetition(base_cfg, 0, self)
        return BaseModel(load_model(path), task)

    def bases(self, config):
        if config.base_models:
            missing = [p for p in config.base_models if not os.path.exists(p)]
            if missing:
                raise FileNotFoundError(f"missing base model files: {missing}")
            return [BaseModel(load_model(p), t) for p, t in zip(config.base_models, config.base_tasks)]
        return [self.base_model(t, config) for t in config.base_tasks]


def _atomic(path, write):
    tmp = f"{path}.tmp{os.getpid()}"
    write(tmp)
    os.replace(tmp, path)


def run_repetition(config, rep, ws):
    """Train and test repetition ``rep``; cached in the run directory.

    Returns ``(test_error_pct, params, seconds)``.
    """
    out = ws.run_dir(config)
    summary = os.path.join(out, f"rep{rep}.txt")
    if os.path.exists(summary):
        kv = read_kv(summary)
        return float(kv["test_error_pct"]), int(kv["params"]), float(kv["seconds"])
    seed = rep_seed(config.master_seed, rep)
    tc = replace(config.train_config, seed=seed)
    train_set = ws.train_set(config.task, config.train_size, config.master_seed)
    test_set = ws.test_set(config.task, config.master_seed, config.test_size)
    start = time.perf_counter()
    if config.mode == SCRATCH:
        model = mlp(config.net_spec, seed=seed)
        model, tlog = train(model, train_set.features(), train_set.labels, tc)
        params = param_count(model)
        _atomic(os.path.join(out, f"rep{rep}.bnmd"), lambda p: save_model(model, p))
    else:
        check_admissible(config.task, config.base_tasks)
        bases = ws.bases(config)
        model = compose(bases, config.block_spec, seed)
        model, tlog = train_block(model, train_set.features(), train_set.labels, tc)
        params = sum(l.size for l in model.trainable_layers().values())
        _atomic(os.path.join(out, f"rep{rep}.bnbk"), lambda p: save_block(model, p))
    error = evaluate(model, test_set.features(), test_set.labels)
    seconds = time.perf_counter() - start
    tlog.write_csv(os.path.join(out, f"rep{rep}.log.csv"))
    _atomic(summary, lambda p: write_kv(p, {"test_error_pct": repr(error), "params": params,
                                            "seconds": repr(seconds), "best_epoch": tlog.best_epoch}))
    log.info("%s %s rep %d: %.2f%%", config.arch_name, config.task, rep, error)
    return error, params, seconds


def _rep_worker(args):
    config, rep, root, master, test_size = args
    return run_repetition(config, rep, Workspace(root, master, test_size))


def run_experiment(config, ws):
    """All repetitions of ``config``: shared data, per-repetition seeds."""
    config.validate()
    if config.mode == BLOCK:
        check_admissible(config.task, config.base_tasks)
        ws.bases(config)  # build any missing base before fanning out
    ws.train_set(config.task, config.train_size, config.master_seed)
    ws.test_set(config.task, config.master_seed, config.test_size)
    reps = range(config.repetitions)
    if ws.workers > 1 and config.repetitions > 1:
        jobs = [(config, r, ws.root, ws.master_seed, ws.test_size) for r in reps]
        with ProcessPoolExecutor(min(ws.workers, len(jobs))) as pool:
            outcomes = list(pool.map(_rep_worker, jobs))
    else:
        outcomes = [run_repetition(config, r, ws) for r in reps]
    return ExperimentResult(
        task=config.task,
        arch=config.arch_name,
        errors=tuple(o[0] for o in outcomes),
        params=outcomes[0][1],
        seconds=sum(o[2] for o in outcomes),
        base_tasks=tuple(config.base_tasks),
    )


# --- tables -------------------------------------------------------------------

@dataclass
class TableRow:
    condition: str
    task: str
    base_tasks: Tuple[str, ...]
    cells: Dict[str, ExperimentResult]
    scratch: Optional[ExperimentResult] = None

    def flag(self, arch):
        """Block mean no worse than the scratch reference (bold in the published tables)."""
        return self.scratch is not None and self.cells[arch].mean <= self.scratch.mean


@dataclass
class TableResult:
    table_id: int
    scale: float
    archs: List[str]
    rows: List[TableRow]

    def params(self, arch):
        return next(r.cells[arch].params for r in self.rows)


def _settings(ws, repetitions, train_config):
    return dict(test_size=ws.test_size, repetitions=repetitions,
                train_config=train_config or TrainConfig(), master_seed=ws.master_seed)


def scratch_config(task, scale, ws, repetitions=3, train_config=None, net=BASE_NET):
    n = scaled(PAPER_TRAIN_SIZE[1], scale)
    return ExperimentConfig(SCRATCH, task, n, net_spec=net, base_train_size=n,
                            **_settings(ws, repetitions, train_config))


def block_config(task, bases, spec, scale, ws, repetitions=3, train_config=None):
    return ExperimentConfig(BLOCK, task, scaled(PAPER_TRAIN_SIZE[2], scale), base_tasks=bases,
                            block_spec=spec, base_train_size=scaled(PAPER_TRAIN_SIZE[1], scale),
                            **_settings(ws, repetitions, train_config))


def run_table(table_id, scale, ws, repetitions=3, train_config=None):
    """Every row of published table ``table_id`` at train sizes scaled by ``scale``."""
    scaled(1, scale)
    if table_id == 1:
        archs = ["NN-" + "-".join(map(str, a)) for a in SCRATCH_ARCHS]
        rows = []
        for task in TASKS:
            cells = {}
            for arch, net in zip(archs, SCRATCH_ARCHS):
                cells[arch] = run_experiment(scratch_config(task, scale, ws, repetitions, train_config, net), ws)
            rows.append(TableRow(task, task, (), cells))
        return TableResult(1, scale, archs, rows)
    if table_id == 2:
        layout = [(t, b, f"{t} ({'+'.join(b)})") for t, b in TABLE2_ROWS]
    elif table_id == 3:
        layout = [(t, tuple(x for x in TASKS if x != t), f"{t} (all bases except {t})") for t in TABLE3_TARGETS]
    else:
        raise ValueError(f"no table {table_id}; expected 1, 2 or 3")
    archs = [s.name for s in BLOCK_ARCHS]
    rows = []
    for task, bases, condition in layout:
        check_admissible(task, bases)
        cells = {s.name: run_experiment(block_config(task, bases, s, scale, ws, repetitions, train_config), ws)
                 for s in BLOCK_ARCHS}
        ref = run_experiment(scratch_config(task, scale, ws, repetitions, train_config), ws)
        rows.append(TableRow(condition, task, bases, cells, ref))
    return TableResult(table_id, scale, archs, rows)


# --- base-count sweep ------------------------------------------------------

@dataclass
class SweepEntry:
    m: int
    task: str
    base_tasks: Tuple[str, ...]
    arch: str
    block: ExperimentResult
    scratch: ExperimentResult

    @property
    def outperforms(self):
        return self.block.mean < self.scratch.mean


@dataclass
class SweepResult:
    scale: float
    entries: List[SweepEntry] = field(default_factory=list)

    def counts(self):
        return sorted({e.m for e in self.entries})

    def fraction(self, m):
        hits = [e.outperforms for e in self.entries if e.m == m]
        return sum(hits) / len(hits)

    def points(self):
        return [(m, self.fraction(m)) for m in self.counts()]


def sweep_pairs(m, samples, master):
    """``samples`` distinct (base subset, admissible target) pairs for ``m`` bases."""
    if not 1 <= m < len(TASKS):
        raise ValueError(f"base count must lie in 1..{len(TASKS) - 1}")
    pairs = [(subset, target) for subset in itertools.combinations(TASKS, m)
             for target in TASKS if target not in subset]
    if samples > len(pairs):
        warnings.warn(f"only {len(pairs)} distinct architectures with m={m}; using all of them")
        samples = len(pairs)
    order = Xoshiro256(mix_seed(master, FIG3_SALT, m)).permutation(len(pairs))
    return [pairs[i] for i in order[:samples]]


def run_fig3_sweep(base_counts, samples, scale, ws, repetitions=3, train_config=None, archs=BLOCK_ARCHS):
    result = SweepResult(scale)
    for m in base_counts:
        for subset, target in sweep_pairs(m, samples, ws.master_seed):
            check_admissible(target, subset)
            ref = run_experiment(scratch_config(target, scale, ws, repetitions, train_config), ws)
            for spec in archs:
                cfg = block_config(target, subset, spec, scale, ws, repetitions, train_config)
                result.entries.append(SweepEntry(m, target, subset, spec.name, run_experiment(cfg, ws), ref))
    if not result.entries:
        raise ValueError("empty sweep")
    return result


# --- reports --------------------------------------------------------------------

def emit_report(result, path):
    """Write ``result`` as CSV; sweeps also get ``<stem>_plot.csv`` with (m, percent) pairs.

    Error cells read ``mean(best-worst)`` with one decimal. Returns the paths written.
    """
    if isinstance(result, TableResult):
        if not result.rows:
            raise ValueError("no rows to report")
        header = ["condition"]
        for arch in result.archs:
            header.append(f"{arch} ({result.params(arch)} params)")
            if result.table_id != 1:
                header.append(f"{arch} <= scratch")
        if result.table_id != 1:
            header.append(f"NN-200-100-50 scratch ({result.rows[0].scratch.params} params)")
        lines = [header]
        for row in result.rows:
            line = [row.condition]
            for arch in result.archs:
                line.append(row.cells[arch].cell())
                if result.table_id != 1:
                    line.append("1" if row.flag(arch) else "0")
            if result.table_id != 1:
                line.append(row.scratch.cell())
            lines.append(line)
        _write_csv(path, lines)
        return [path]
    if isinstance(result, SweepResult):
        if not result.entries:
            raise ValueError("no sweep entries to report")
        lines = [["m", "target", "bases", "architecture", "block", "scratch", "outperforms"]]
        for e in result.entries:
            lines.append([str(e.m), e.task, "+".join(e.base_tasks), e.arch, e.block.cell(),
                          e.scratch.cell(), "1" if e.outperforms else "0"])
        plot = os.path.splitext(os.fspath(path))[0] + "_plot.csv"
        _write_csv(path, lines)
        _write_csv(plot, [["m", "outperform_pct"]] + [[str(m), f"{100.0 * f:.1f}"] for m, f in result.points()])
        return [path, plot]
    raise TypeError(f"cannot report {type(result).__name__}")


def _write_csv(path, lines):
    with open(path, "w", newline="") as f:
        csv.writer(f, lineterminator="\n").writerows(lines)


def parse_cell(text):
    """``"5.5(5.4-5.9)"`` -> ``(5.5, 5.4, 5.9)``."""
    mean, rest = text.split("(", 1)
    best, worst = rest.rstrip(")").split("-")
    return float(mean), float(best), float(worst)


def parse_report(path):
    """Rows of an emitted CSV as dicts; error cells become (mean, best, worst) tuples."""
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        for key, value in row.items():
            if key != "condition" and value.endswith(")"):
                row[key] = parse_cell(value)
    return rows
