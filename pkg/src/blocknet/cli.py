"""Command line: ``python -m blocknet <command>`` (also installed as ``blocknet``)."""
import argparse
import logging
import os
import sys

from . import harness
from .block import BLOCK_MAGIC, load_block, read_block_header
from .config import BLOCK, DEFAULT_TEST_SIZE, SCRATCH, ExperimentConfig, read_kv
from .dataset import build_dataset, read_dataset, write_dataset
from .modelio import load_model
from .network import evaluate
from .stimuli import TASKS
from .training import TrainConfig


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=default(0),
                        help="master seed (u64; for gen-data, the dataset seed)")
    parser.add_argument("--out-dir", default=default("blocknet-out"), help="workspace directory")
    parser.add_argument("--threads", type=int, default=default(1), help="worker processes")
    parser.add_argument("--test-size", type=int, default=default(DEFAULT_TEST_SIZE))
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def _run_options(path):
    """Optional ``--config`` for table/fig3: TrainConfig fields plus repetitions."""
    kv = read_kv(path) if path else {}
    reps = int(kv.pop("repetitions", 3))
    tc = {}
    for name, value in kv.items():
        kind = type(getattr(TrainConfig(), name, None))
        if kind not in (int, float) or name == "seed":
            raise ValueError(f"unknown run option {name!r}")
        tc[name] = kind(value)
    return reps, TrainConfig(**tc)


def build_parser():
    parser = argparse.ArgumentParser(prog="blocknet", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate a BNDS dataset file")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)

    for name in ("train", "train-block"):
        p = sub.add_parser(name, parents=[common], help=f"run a {name.replace('-', ' ')} experiment")
        p.add_argument("--config", required=True, help="key=value experiment file")

    p = sub.add_parser("eval", parents=[common], help="test error of a model on a dataset")
    p.add_argument("--model", required=True, help=".bnmd network or block model")
    p.add_argument("--data", required=True)
    p.add_argument("--bases", nargs="*", default=[], help="base model files of a block model")

    p = sub.add_parser("table", parents=[common], help="reproduce table 1, 2 or 3")
    p.add_argument("--id", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--scale", type=float, default=harness.DESK_SCALE)
    p.add_argument("--full-scale", action="store_true", help="use the full dataset sizes (350K/200K)")
    p.add_argument("--config", help="optional key=value training options")

    p = sub.add_parser("fig3", parents=[common], help="outperformance fraction against base count")
    p.add_argument("--scale", type=float, default=harness.DESK_SCALE)
    p.add_argument("--full-scale", action="store_true")
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--counts", default="1,2,3,4,5")
    p.add_argument("--config")

    sub.add_parser("verify", parents=[common], help="parameter-count, freeze and gradient checks")
    return parser


def _workspace(args, master=None):
    return harness.Workspace(args.out_dir, args.seed if master is None else master,
                             args.test_size, args.threads)


def _cmd_gen_data(args):
    ds = build_dataset(args.task, args.n, args.seed, workers=args.threads)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} {args.task} examples to {args.out}")


def _cmd_train(args, mode):
    config = ExperimentConfig.load(args.config)
    if config.mode != mode:
        want = "train-block" if config.mode == BLOCK else "train"
        raise SystemExit(f"{args.config} is a {config.mode} config; use `{want}`")
    ws = _workspace(args, config.master_seed)
    result = harness.run_experiment(config, ws)
    errors = " ".join(f"{e:.2f}" for e in result.errors)
    print(f"{result.arch} on {result.task}: {result.cell()} [{errors}] "
          f"params={result.params} time={result.seconds:.1f}s")
    print(f"models and logs in {ws.run_dir(config)}")


def _cmd_eval(args):
    with open(args.model, "rb") as f:
        magic = f.read(4)
    data = read_dataset(args.data)
    if magic == BLOCK_MAGIC:
        with open(args.model, "rb") as f:
            _, entries, _ = read_block_header(f.read())
        if len(args.bases) != len(entries):
            raise SystemExit(f"block model needs {len(entries)} --bases files")
        model = load_block(args.model, [(load_model(p), t) for p, (t, _) in zip(args.bases, entries)])
    else:
        model = load_model(args.model)
    print(f"test error {evaluate(model, data.features(), data.labels):.2f}% on {len(data)} {data.task} examples")


def _scale(args):
    return 1.0 if args.full_scale else args.scale


def _cmd_table(args):
    reps, tc = _run_options(args.config)
    result = harness.run_table(args.id, _scale(args), _workspace(args), reps, tc)
    path = os.path.join(args.out_dir, f"table{args.id}.csv")
    harness.emit_report(result, path)
    with open(path) as f:
        sys.stdout.write(f.read())


def _cmd_fig3(args):
    reps, tc = _run_options(args.config)
    counts = [int(c) for c in args.counts.split(",") if c]
    result = harness.run_fig3_sweep(counts, args.samples, _scale(args), _workspace(args), reps, tc)
    paths = harness.emit_report(result, os.path.join(args.out_dir, "fig3.csv"))
    with open(paths[1]) as f:
        sys.stdout.write(f.read())


def _cmd_verify(args):
    from .invariants import run_all

    ok = True
    for name, passed, detail in run_all():
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    handlers = {
        "gen-data": _cmd_gen_data,
        "train": lambda a: _cmd_train(a, SCRATCH),
        "train-block": lambda a: _cmd_train(a, BLOCK),
        "eval": _cmd_eval,
        "table": _cmd_table,
        "fig3": _cmd_fig3,
        "verify": _cmd_verify,
    }
    return handlers[args.command](args) or 0


if __name__ == "__main__":
    sys.exit(main())
