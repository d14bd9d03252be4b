import csv
import json
import math

import numpy as np
import pytest

from fdapipe import CurriculumConfig, schedule_table
from fdapipe.cli import main
from fdapipe.imageio import load_image, save_image, save_mask
from oracles import seeded_image


def _png(path, seed, h=16, w=16):
    save_image(path, seeded_image(seed, h, w))


def test_fuse_command(tmp_path, capsys):
    _png(tmp_path / "a.png", 1)
    _png(tmp_path / "b.png", 2)
    out = tmp_path / "c.png"
    rc = main([
        "fuse", "--src", str(tmp_path / "a.png"), "--tgt", str(tmp_path / "b.png"),
        "--alpha", "0.5", "--beta", "0.2", "--out", str(out),
    ])
    assert rc == 0 and out.exists()
    assert load_image(out).shape == (16, 16, 3)


def test_fuse_rejects_bad_alpha(tmp_path, capsys):
    _png(tmp_path / "a.png", 1)
    _png(tmp_path / "b.png", 2)
    rc = main([
        "fuse", "--src", str(tmp_path / "a.png"), "--tgt", str(tmp_path / "b.png"),
        "--alpha", "1.5", "--beta", "0.2", "--out", str(tmp_path / "c.png"),
    ])
    assert rc == 2
    record = json.loads(capsys.readouterr().err.strip())
    assert record["error"] == "validation"


def test_schedule_command_emits_table(tmp_path):
    out = tmp_path / "table.csv"
    rc = main([
        "schedule", "--kind", "exponential", "--beta-opt", "0.006",
        "--epochs", "100", "--epoch-ratio", "0.5", "--out", str(out),
    ])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 100
    cfg = CurriculumConfig(0.006, 0.5, 100, "exponential")
    expected = dict(schedule_table(cfg))
    for row in rows:
        assert float(row["beta"]) == pytest.approx(
            expected[int(row["epoch"])], abs=1e-12
        )


def test_augment_command(tmp_path):
    _png(tmp_path / "in.png", 3, 32, 32)
    mask = np.zeros((32, 32), dtype=np.int32)
    mask[4:20, 4:20] = 1
    save_mask(tmp_path / "m.png", mask)
    rc = main([
        "augment", "--in", str(tmp_path / "in.png"), "--mask", str(tmp_path / "m.png"),
        "--level", "3", "--seed", "5", "--out", str(tmp_path / "out.png"),
        "--out-mask", str(tmp_path / "om.png"),
    ])
    assert rc == 0
    assert (tmp_path / "out.png").exists() and (tmp_path / "om.png").exists()


def test_corrupt_command(tmp_path, capsys):
    data = tmp_path / "data"
    data.mkdir()
    _png(data / "x.png", 4, 24, 24)
    rc = main([
        "corrupt", "--in", str(data), "--out", str(tmp_path / "out"),
        "--seed", "6", "--kinds", "brightness", "fog", "--severities", "1", "3",
    ])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out.strip())
    assert summary == {"written": 4, "failed": 0}


def test_epoch_and_run_commands(tmp_path, capsys):
    root = tmp_path / "data"
    (root / "source").mkdir(parents=True)
    (root / "target").mkdir(parents=True)
    for i in range(2):
        _png(root / "source" / f"s{i}.png", 10 + i)
        _png(root / "target" / f"t{i}.png", 20 + i)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                "seed = 9",
                "epochs = 2",
                "epoch_ratio = 1.0",
                "scheduler = linear",
                "beta_opt = 0.5",
                "alpha = 1.0",
                "aug_level = 3",
                "image_height = 16",
                "image_width = 16",
                f"source_images = {root / 'source'}",
                f"target_images = {root / 'target'}",
                f"output_root = {tmp_path / 'out'}",
            ]
        )
    )
    rc = main(["epoch", "--config", str(cfg), "--epoch", "1"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out.strip())["written"] == 2
    rc = main(["run", "--config", str(cfg)])
    assert rc == 0
    assert json.loads(capsys.readouterr().out.strip()) == {
        "epochs": 2, "written": 4, "failed": 0,
    }
    assert (tmp_path / "out" / "epoch_000" / "manifest.jsonl").exists()
    assert (tmp_path / "out" / "epoch_001" / "manifest.jsonl").exists()


def test_dice_command(tmp_path, capsys):
    pred, gt = tmp_path / "pred", tmp_path / "gt"
    pred.mkdir(), gt.mkdir()
    mask = np.zeros((8, 8), dtype=np.int32)
    mask[2:6, 2:6] = 1
    save_mask(pred / "a.png", mask)
    save_mask(gt / "a.png", mask)
    rc = main([
        "dice", "--pred", str(pred), "--gt", str(gt), "--classes", "1",
        "--out", str(tmp_path / "r.csv"),
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out.strip())
    assert report["mean"] == 1.0 and report["std"] == 0.0
    assert (tmp_path / "r.csv").exists()


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main([
        "sweep", "--epoch-ratios", "0.2", "0.5", "0.8",
        "--kinds", "linear", "exponential",
        "--beta-opt", "1.0", "--epochs", "10", "--out", str(out),
    ])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3 * 10
    assert {r["kind"] for r in rows} == {"linear", "exponential"}


def test_init_config_preset(tmp_path):
    out = tmp_path / "run.cfg"
    rc = main([
        "init-config", "--preset", "nuclei", "--seed", "3", "--out", str(out),
        "--source-images", "src", "--target-images", "tgt", "--output-root", "o",
    ])
    assert rc == 0
    text = out.read_text()
    assert "beta_opt = 1.0" in text and "alpha = 0.7" in text


def test_init_config_unknown_preset(tmp_path, capsys):
    rc = main([
        "init-config", "--preset", "cardiac", "--seed", "3",
        "--out", str(tmp_path / "x.cfg"),
    ])
    assert rc == 2


def test_make_fixtures(tmp_path):
    rc = main([
        "make-fixtures", "--out", str(tmp_path / "fx"), "--seed", "1",
        "--count", "2", "--height", "16", "--width", "16", "--npy",
    ])
    assert rc == 0
    assert len(list((tmp_path / "fx" / "source").glob("*.png"))) == 2
    assert len(list((tmp_path / "fx" / "source_masks").glob("*.png"))) == 2
    npy = np.load(tmp_path / "fx" / "source_npy" / "s0000.npy")
    png = load_image(tmp_path / "fx" / "source" / "s0000.png")
    assert np.array_equal(npy, png)


def test_abi_command(capsys):
    assert main(["abi"]) == 0
    record = json.loads(capsys.readouterr().out.strip())
    assert record["abi"] == "fdapipe/1"


def test_missing_seed_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit):
        main(["augment", "--in", "x.png", "--out", "y.png"])


def test_no_command_prints_help(capsys):
    assert main([]) == 2
