import csv
import json
import os

import numpy as np
import pytest

from schurrnn import cli
from schurrnn.schur import init_params, save_checkpoint

SWEEP = "src/schurrnn/data/fmc_sweep_sm.json"


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return str(path)


def train_config(tmp_path, **over):
    doc = {
        "task": {"kind": "copy", "delay": 4},
        "model": {"n": 8},
        "train": {"max_updates": 15, "log_every": 5, "batch_size": 4},
        "seed": 0,
    }
    doc.update(over)
    return write_json(tmp_path / "train.json", doc)


def test_train_smoke(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["train", "--config", train_config(tmp_path),
                     "--out", str(out)])
    assert code == 0
    assert (out / "train_log.csv").exists()
    assert (out / "checkpoint.json").exists()
    assert (out / "connectivity_report.json").exists()
    rows = list(csv.reader((out / "train_log.csv").open()))
    assert len(rows) == 4  # header + 3 logged steps


def test_train_zero_updates_checkpoint_is_init(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["train",
                     "--config", train_config(tmp_path, train={"max_updates": 0}),
                     "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "checkpoint.json").read_text())
    init = init_params(8, rng_seed=0)
    assert np.allclose(doc["gamma"], init.gamma)
    rows = list(csv.reader((out / "train_log.csv").open()))
    assert len(rows) == 1  # header only


def test_missing_config_exit_1(tmp_path, capsys):
    code = cli.main(["train", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_key_exit_1(tmp_path):
    path = write_json(tmp_path / "bad.json", {
        "task": {"kind": "copy"}, "model": {"n": 8}, "bogus": 1})
    assert cli.main(["train", "--config", path, "--out", str(tmp_path / "o")]) == 1


def test_bad_task_kind_exit_1(tmp_path):
    path = write_json(tmp_path / "bad.json", {
        "task": {"kind": "sudoku"}, "model": {"n": 8}})
    assert cli.main(["train", "--config", path, "--out", str(tmp_path / "o")]) == 1


def test_fmc_bundled_sweep(tmp_path):
    out = tmp_path / "fmc"
    assert cli.main(["fmc", "--config", SWEEP, "--out", str(out)]) == 0
    rows = list(csv.reader((out / "fmc_summary.csv").open()))
    assert rows[0] == ["row", "n", "d", "alpha", "beta", "j_tot", "status"]
    assert len(rows) == 13
    assert all(r[6] == "ok" for r in rows[1:])
    # per-row curve files
    assert sorted(os.listdir(out)) == sorted(
        ["fmc_summary.csv"] + [f"fmc_{i:02d}.csv" for i in range(12)])


def test_fmc_empty_sweep(tmp_path):
    path = write_json(tmp_path / "empty.json", {"sweep": []})
    out = tmp_path / "out"
    assert cli.main(["fmc", "--config", path, "--out", str(out)]) == 0
    rows = list(csv.reader((out / "fmc_summary.csv").open()))
    assert len(rows) == 1


def test_props_default_grid(tmp_path):
    path = write_json(tmp_path / "props.json", {
        "prop2": [{"n": 4, "t_max": 8}], "prop1": [{"n": 6, "alpha": 1.0}]})
    out = tmp_path / "props"
    assert cli.main(["props", "--config", path, "--out", str(out)]) == 0
    doc = json.loads((out / "prop2_00.json").read_text())
    assert doc["degree_ok"] and doc["ratio_ok"]
    doc1 = json.loads((out / "prop1_00.json").read_text())
    assert doc1["holds"]


def test_transients_deterministic_bytes(tmp_path):
    path = write_json(tmp_path / "t.json", {
        "configs": [{"n": 10, "alpha": 1.05}], "n_samples": 1, "t_max": 12})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["transients", "--config", path, "--out", str(out1)]) == 0
    assert cli.main(["transients", "--config", path, "--out", str(out2)]) == 0
    b1 = (out1 / "transients_00.csv").read_bytes()
    assert b1 == (out2 / "transients_00.csv").read_bytes()
    assert len(b1) > 0


def test_report_on_init_checkpoint(tmp_path):
    ckpt = tmp_path / "ckpt.json"
    save_checkpoint(init_params(8, rng_seed=0), ckpt)
    out = tmp_path / "rep"
    assert cli.main(["report", "--config", str(ckpt), "--out", str(out)]) == 0
    doc = json.loads((out / "connectivity_report.json").read_text())
    assert doc["t_frobenius"] == 0.0
    assert doc["regime"] == "normal"


def test_report_bad_checkpoint_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"oops\": 1}")
    assert cli.main(["report", "--config", str(bad),
                     "--out", str(tmp_path / "o")]) == 1


def test_train_determinism_identical_logs(tmp_path):
    cfgp = train_config(tmp_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    cli.main(["train", "--config", cfgp, "--out", str(out1)])
    cli.main(["train", "--config", cfgp, "--out", str(out2)])
    assert (out1 / "train_log.csv").read_bytes() == (out2 / "train_log.csv").read_bytes()
    assert (out1 / "checkpoint.json").read_bytes() == (out2 / "checkpoint.json").read_bytes()


def test_seed_override_changes_run(tmp_path):
    cfgp = train_config(tmp_path)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    cli.main(["train", "--config", cfgp, "--out", str(out1)])
    cli.main(["train", "--config", cfgp, "--out", str(out2), "--seed", "99"])
    assert (out1 / "checkpoint.json").read_bytes() != (out2 / "checkpoint.json").read_bytes()
