import os

import pytest

from blocknet.cli import main
from blocknet.config import BLOCK, SCRATCH, ExperimentConfig
from blocknet.dataset import build_dataset, read_dataset
from blocknet.training import TrainConfig

QUICK = TrainConfig(max_epochs=2, patience=1)

def test_gen_data(tmp_path, capsys):
    out = tmp_path / "d.bnds"
    assert main(["gen-data", "--task", "crs_ncrs", "--n", "12", "--seed", "7", "--out", str(out)]) == 0
    assert read_dataset(out) == build_dataset("crs_ncrs", 12, 7)
    assert "12 crs_ncrs" in capsys.readouterr().out

def test_seed_flag_position_and_hex(tmp_path):
    a, b = tmp_path / "a.bnds", tmp_path / "b.bnds"
    main(["--seed", "0x10", "gen-data", "--task", "blt_srp", "--n", "4", "--out", str(a)])
    main(["gen-data", "--task", "blt_srp", "--n", "4", "--seed", "16", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()

def test_train_train_block_and_eval(tmp_path, capsys):
    ws = tmp_path / "ws"
    scratch = tmp_path / "s.txt"
    ExperimentConfig(SCRATCH, "ang_crs", 40, net_spec=(5, 4, 3), test_size=20, repetitions=1,
                     train_config=QUICK).save(scratch)
    assert main(["--out-dir", str(ws), "train", "--config", str(scratch)]) == 0
    assert "NN-5-4-3 on ang_crs" in capsys.readouterr().out

    block = tmp_path / "b.txt"
    ExperimentConfig(BLOCK, "blt_srp", 40, base_tasks=("ang_crs",), block_spec=(0, 0, 2), test_size=20,
                     repetitions=1, train_config=QUICK, base_train_size=40).save(block)
    assert main(["train-block", "--config", str(block), "--out-dir", str(ws)]) == 0
    out = capsys.readouterr().out
    assert "BA-0-0-2 on blt_srp" in out
    run_dir = out.strip().split()[-1]
    model = os.path.join(run_dir, "rep0.bnbk")
    base = [os.path.join(ws, "runs", d, "rep0.bnmd") for d in os.listdir(ws / "runs")
            if d.startswith("NN-200-100-50-ang_crs")]
    data = tmp_path / "t.bnds"
    main(["gen-data", "--task", "blt_srp", "--n", "10", "--out", str(data)])
    capsys.readouterr()
    assert main(["eval", "--model", model, "--data", str(data), "--bases", *base]) == 0
    assert "on 10 blt_srp examples" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["train", "--config", str(block), "--out-dir", str(ws)])

def test_verify(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all(l.startswith("PASS") for l in lines)

def test_table_is_byte_reproducible(tmp_path, capsys):
    opts = tmp_path / "opts.txt"
    opts.write_text("repetitions=1\nmax_epochs=2\npatience=1\n")
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert main(["table", "--id", "1", "--scale", "0.0002", "--config", str(opts),
                     "--out-dir", str(d), "--test-size", "20"]) == 0
        outs.append((d / "table1.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].count(b"\n") == 7
    assert capsys.readouterr().out.count("NN-60-40-20") == 2

def test_bad_run_option(tmp_path):
    opts = tmp_path / "opts.txt"
    opts.write_text("learning_rat=1\n")
    with pytest.raises(ValueError):
        main(["table", "--id", "1", "--config", str(opts), "--out-dir", str(tmp_path)])
