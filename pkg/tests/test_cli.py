import json
import subprocess
import sys

import pytest

from gzsl.cli import run

GEN = ["--emotions", "2", "--gestures-per-emotion", "2", "--unseen-per-emotion", "1",
       "--train-per-class", "4", "--test-per-seen-class", "2", "--test-per-unseen-class", "2"]


def _gen(out, seed=3):
    assert run(["gen", "--out", str(out), "--seed", str(seed), *GEN]) == 0
    return out / "dataset.txt", out / "attributes.txt", out / "partition.txt"


def test_gen_is_reproducible(tmp_path):
    a = _gen(tmp_path / "a")
    b = _gen(tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_gen_train_eval_round_trip(tmp_path, capsys):
    data, attrs, part = _gen(tmp_path / "d")
    ckpt = tmp_path / "model.txt"
    code = run(["train", "--dataset", str(data), "--attributes", str(attrs), "--partition", str(part),
                "--checkpoint", str(ckpt), "--epochs", "2", "--batch-size", "4"])
    assert code == 0
    log = [json.loads(l) for l in (tmp_path / "model.txt.log.jsonl").read_text().splitlines()]
    assert [r["epoch"] for r in log] == [1, 2]
    report = tmp_path / "report.json"
    dump = tmp_path / "pred.tsv"
    assert run(["eval", "--dataset", str(data), "--partition", str(part), "--checkpoint", str(ckpt),
                "--out", str(report), "--dump", str(dump)]) == 0
    rep = json.loads(report.read_text())
    assert {"acc_s", "acc_u", "h", "acc_s_em", "acc_u_em", "h_em", "confusion"} <= set(rep)
    assert len(dump.read_text().splitlines()) == 1 + 4 + 4
    capsys.readouterr()
    assert run(["predict", "--dataset", str(data), "--partition", str(part),
                "--checkpoint", str(ckpt), "--per-sample"]) == 0
    assert capsys.readouterr().out.startswith("sample_id\t")
    assert run(["inspect", "--checkpoint", str(ckpt), "--dataset", str(data)]) == 0


def test_config_file_supplies_defaults(tmp_path):
    data, attrs, part = _gen(tmp_path / "d")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": str(data), "attributes": str(attrs), "partition": str(part),
                               "checkpoint": str(tmp_path / "m.txt"), "epochs": 1}))
    assert run(["train", "--config", str(cfg)]) == 0
    cfg.write_text(json.dumps({"epochz": 1}))
    assert run(["train", "--config", str(cfg)]) == 1


def test_exit_codes(tmp_path):
    data, attrs, part = _gen(tmp_path / "d")
    assert run(["eval", "--dataset", str(data), "--partition", str(part),
                "--checkpoint", str(tmp_path / "nope.txt")]) == 2
    assert run(["eval", "--frobnicate"]) == 1
    assert run(["train", "--dataset", str(data)]) == 1
    assert run(["train", "--dataset", str(data), "--attributes", str(attrs), "--partition", str(part),
                "--checkpoint", str(tmp_path / "m.txt"), "--beta1", "-1"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("garbage\n")
    assert run(["inspect", "--dataset", str(bad)]) == 2
    assert run([]) == 1


@pytest.mark.parametrize("command", ["gen", "train", "eval", "predict", "inspect"])
def test_help(command, capsys):
    assert run([command, "--help"]) == 0
    assert "--config" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gzsl", "inspect"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "usage error" in proc.stderr
