import json
import math
import pathlib
import shutil
import subprocess
import sys

import pytest

from omnibox.cli import main

DATA = pathlib.Path(__file__).parent / "data"
TOY = DATA / "toy_coco.json"
GOLDEN = DATA / "toy_boxes_golden.json"
IMAGES = DATA / "images"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _dataset(tmp_path, name, images):
    """images: list of (id, size, [(cx,cy,w,h,deg,score|None), ...])"""
    payload = {"meta": {}, "images": []}
    for img_id, (w, h), boxes in images:
        rows = []
        for b in boxes:
            row = {"cx": b[0], "cy": b[1], "w": b[2], "h": b[3], "angle_deg": b[4]}
            if len(b) > 5 and b[5] is not None:
                row["score"] = b[5]
            rows.append(row)
        payload["images"].append(
            {"id": img_id, "file": f"{img_id}.png", "width": w, "height": h, "boxes": rows}
        )
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return p


# ------------------------------------------------------------ gen-boxes


def test_gen_boxes_matches_golden_byte_for_byte(tmp_path, capsys):
    out = tmp_path / "boxes.json"
    code, stdout, _ = run_cli(capsys, "gen-boxes", "--coco", str(TOY), "--out", str(out))
    assert code == 0
    assert out.read_bytes() == GOLDEN.read_bytes()
    report = json.loads(stdout)  # stdout carries machine-readable JSON only
    assert report["load"]["images_kept"] == 3
    assert report["generate"]["boxes"] == 5


def test_gen_boxes_keep_degenerate(tmp_path, capsys):
    out = tmp_path / "boxes.json"
    code, stdout, _ = run_cli(
        capsys,
        "gen-boxes",
        "--coco",
        str(TOY),
        "--out",
        str(out),
        "--keep-degenerate",
        "--min-visibility",
        "0.0",
    )
    assert code == 0
    assert json.loads(stdout)["generate"]["boxes"] == 6


def test_gen_boxes_missing_file_is_io_error(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "gen-boxes", "--coco", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.json")
    )
    assert code == 2
    assert "error" in err


def test_gen_boxes_malformed_json_is_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"images": [', encoding="utf-8")
    code, _, err = run_cli(
        capsys, "gen-boxes", "--coco", str(bad), "--out", str(tmp_path / "o.json")
    )
    assert code == 1
    assert "byte" in err


def test_gen_boxes_unknown_category(tmp_path, capsys):
    code, _, err = run_cli(
        capsys,
        "gen-boxes",
        "--coco",
        str(TOY),
        "--out",
        str(tmp_path / "o.json"),
        "--category",
        "zebra",
    )
    assert code == 1
    assert "zebra" in err


# ------------------------------------------------------------ config file


def test_config_file_applies_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("category = bench  # comment\n\n", encoding="utf-8")
    out = tmp_path / "a.json"
    code, stdout, _ = run_cli(
        capsys, "gen-boxes", "--coco", str(TOY), "--out", str(out), "--config", str(cfg)
    )
    assert code == 0
    bench_boxes = json.loads(stdout)["generate"]["boxes"]
    assert bench_boxes != 5

    out2 = tmp_path / "b.json"
    code, stdout, _ = run_cli(
        capsys,
        "gen-boxes",
        "--coco",
        str(TOY),
        "--out",
        str(out2),
        "--config",
        str(cfg),
        "--category",
        "person",
    )
    assert code == 0
    assert json.loads(stdout)["generate"]["boxes"] == 5
    assert out2.read_bytes() == GOLDEN.read_bytes()


def test_config_file_boolean_keys(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("keep_degenerate = true\nmin-visibility = 0.0\n", encoding="utf-8")
    code, stdout, _ = run_cli(
        capsys,
        "gen-boxes",
        "--coco",
        str(TOY),
        "--out",
        str(tmp_path / "o.json"),
        "--config",
        str(cfg),
    )
    assert code == 0
    assert json.loads(stdout)["generate"]["boxes"] == 6


def test_config_file_bad_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("category bench\n", encoding="utf-8")
    code, _, err = run_cli(
        capsys,
        "gen-boxes",
        "--coco",
        str(TOY),
        "--out",
        str(tmp_path / "o.json"),
        "--config",
        str(cfg),
    )
    assert code == 1
    assert "key = value" in err


# ------------------------------------------------------------ augment


def test_augment_end_to_end(tmp_path, capsys):
    out = tmp_path / "aug"
    code, stdout, _ = run_cli(
        capsys,
        "augment",
        "--coco",
        str(TOY),
        "--images",
        str(IMAGES),
        "--out",
        str(out),
        "--seed",
        "3",
    )
    assert code == 0
    report = json.loads(stdout)
    assert report["images"] == 3
    assert report["failures"] == []
    assert (out / "annotations.json").exists()
    pngs = sorted(p.name for p in out.glob("*.png"))
    assert pngs == ["scene_a.png", "scene_b.png", "scene_c.png"]
    ann = json.loads((out / "annotations.json").read_text())
    assert len(ann["images"]) == 3


def test_augment_missing_images_partial_failure(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    out = tmp_path / "aug"
    code, stdout, err = run_cli(
        capsys, "augment", "--coco", str(TOY), "--images", str(empty), "--out", str(out)
    )
    assert code == 3
    report = json.loads(stdout)
    assert len(report["failures"]) == 3
    assert "skipping" in err
    # the run still writes a (trivial) dataset for the surviving images
    assert (out / "annotations.json").exists()


def test_augment_fixed_params_deterministic(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run_cli(
            capsys,
            "augment",
            "--coco",
            str(TOY),
            "--images",
            str(IMAGES),
            "--out",
            str(out),
            "--seed",
            "5",
            "--fixed-f",
            "40.0",
            "--fixed-qc",
            "31.5,31.5",
            "--out-size",
            "64",
            "--dump-segments",
            "--write-masks",
        )
        assert code == 0
        outs.append(out)
    a, b = outs
    for rel in ("annotations.json", "segments.json", "scene_a.png", "scene_a_mask.png"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    segs = json.loads((a / "segments.json").read_text())
    assert [img["id"] for img in segs["images"]] == [1, 2, 3]


def test_augment_fixed_f_requires_fixed_qc(tmp_path, capsys):
    code, _, err = run_cli(
        capsys,
        "augment",
        "--coco",
        str(TOY),
        "--images",
        str(IMAGES),
        "--out",
        str(tmp_path / "x"),
        "--fixed-f",
        "40.0",
    )
    assert code == 1
    assert "together" in err


# ------------------------------------------------------------ match-loss


def _pair(tmp_path, pred_boxes, gt_boxes=None):
    gt_boxes = gt_boxes or [(30.0, 30.0, 10.0, 20.0, 15.0), (70.0, 60.0, 8.0, 16.0, -30.0)]
    gt = _dataset(tmp_path, "gt.json", [(1, (100, 100), gt_boxes)])
    pred = _dataset(tmp_path, "pred.json", [(1, (100, 100), pred_boxes)])
    return gt, pred


def test_match_loss_perfect_predictions(tmp_path, capsys):
    boxes = [(30.0, 30.0, 10.0, 20.0, 15.0, 1.0), (70.0, 60.0, 8.0, 16.0, -30.0, 1.0)]
    gt, pred = _pair(tmp_path, boxes)
    code, stdout, _ = run_cli(capsys, "match-loss", "--gt", str(gt), "--pred", str(pred))
    assert code == 0
    report = json.loads(stdout)
    assert report["aggregate"]["total"] <= 1e-6
    assert report["weights"] == {
        "lambda_c": 2.0,
        "lambda_b": 5.0,
        "lambda_u": 2.0,
        "lambda_a": 0.1,
    }
    assert report["images"]["1"]["assignment"] == [0, 1]


def test_match_loss_id_mismatch(tmp_path, capsys):
    gt = _dataset(tmp_path, "gt.json", [(1, (100, 100), [(30, 30, 10, 20, 0)])])
    pred = _dataset(
        tmp_path, "pred.json", [(2, (100, 100), [(30, 30, 10, 20, 0, 0.9)])]
    )
    code, _, err = run_cli(capsys, "match-loss", "--gt", str(gt), "--pred", str(pred))
    assert code == 1
    assert "only in GT" in err and "only in prediction" in err


def test_match_loss_negative_lambda(tmp_path, capsys):
    gt, pred = _pair(tmp_path, [(30, 30, 10, 20, 15, 0.9), (70, 60, 8, 16, -30, 0.8)])
    code, _, err = run_cli(
        capsys, "match-loss", "--gt", str(gt), "--pred", str(pred), "--lambda-b", "-1"
    )
    assert code == 1
    assert "non-negative" in err


def test_match_loss_requires_scores(tmp_path, capsys):
    gt, pred = _pair(tmp_path, [(30, 30, 10, 20, 15), (70, 60, 8, 16, -30)])
    code, _, err = run_cli(capsys, "match-loss", "--gt", str(gt), "--pred", str(pred))
    assert code == 1
    assert "scores" in err


def test_match_loss_more_gts_than_predictions(tmp_path, capsys):
    gt, pred = _pair(tmp_path, [(30, 30, 10, 20, 15, 0.9)])
    code, _, err = run_cli(capsys, "match-loss", "--gt", str(gt), "--pred", str(pred))
    assert code == 1
    assert "exceed" in err


def test_match_loss_skips_zero_gt_images(tmp_path, capsys):
    gt = _dataset(
        tmp_path,
        "gt.json",
        [(1, (100, 100), [(30, 30, 10, 20, 0)]), (2, (100, 100), [])],
    )
    pred = _dataset(
        tmp_path,
        "pred.json",
        [
            (1, (100, 100), [(30, 30, 10, 20, 0, 0.9)]),
            (2, (100, 100), [(50, 50, 10, 20, 0, 0.4)]),
        ],
    )
    code, stdout, err = run_cli(capsys, "match-loss", "--gt", str(gt), "--pred", str(pred))
    assert code == 0
    assert json.loads(stdout)["skipped_zero_gt"] == 1
    assert "warning" in err


# ------------------------------------------------------------ evaluate


def test_evaluate_gt_as_predictions_is_perfect(tmp_path, capsys):
    boxes = [(30.0, 30.0, 10.0, 20.0, 15.0), (70.0, 60.0, 8.0, 16.0, -30.0)]
    scored = [b + (0.9,) for b in boxes]
    gt = _dataset(tmp_path, "gt.json", [(1, (100, 100), boxes)])
    pred = _dataset(tmp_path, "pred.json", [(1, (100, 100), scored)])
    code, stdout, _ = run_cli(capsys, "evaluate", "--gt", str(gt), "--pred", str(pred))
    assert code == 0
    report = json.loads(stdout)
    assert report["ap"] == 1.0
    assert report["ap50"] == 1.0
    assert report["ap75"] == 1.0
    assert "distance_bins" not in report


def test_evaluate_with_distance_strata(tmp_path, capsys):
    boxes = [(30.0, 30.0, 10.0, 20.0, 15.0)]
    gt = _dataset(tmp_path, "gt.json", [(1, (100, 100), boxes)])
    pred = _dataset(tmp_path, "pred.json", [(1, (100, 100), [boxes[0] + (0.9,)])])
    code, stdout, _ = run_cli(
        capsys,
        "evaluate",
        "--gt",
        str(gt),
        "--pred",
        str(pred),
        "--strata",
        "distance",
        "--rotate-interval",
        "45",
        "--distance-bins",
        "4",
    )
    assert code == 0
    report = json.loads(stdout)
    assert len(report["distance_bins"]) == 4
    populated = [b for b in report["distance_bins"] if b["mean_ap50"] is not None]
    assert populated and all(b["mean_ap50"] == 1.0 for b in populated)
    assert "angle_bins" not in report


# ------------------------------------------------------------ stats


def test_stats_on_golden(capsys):
    code, stdout, _ = run_cli(capsys, "stats", "--input", str(GOLDEN))
    assert code == 0
    report = json.loads(stdout)
    assert report["images"] == 3
    assert report["boxes"] == 5
    assert report["scored_images"] == 0
    assert report["strata"] == {"small": 5, "medium": 0, "large": 0}
    assert sum(report["angle_deg_histogram"]["counts"]) == 5
    assert report["area"]["max"] == pytest.approx(32.0 * 40.0)


def test_stats_cepdof_format(tmp_path, capsys):
    payload = {"frame_1": [[30.0, 30.0, 10.0, 20.0, 15.0]]}
    p = tmp_path / "cep.json"
    p.write_text(json.dumps(payload), encoding="utf-8")
    code, stdout, _ = run_cli(capsys, "stats", "--input", str(p), "--format", "cepdof-json")
    assert code == 0
    assert json.loads(stdout)["boxes"] == 1


# ------------------------------------------------------------ wiring


def test_console_script_installed():
    exe = shutil.which("omnibox")
    assert exe, "console script 'omnibox' not on PATH"
    out = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "gen-boxes" in out.stdout


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "omnibox.cli", "stats", "--input", str(GOLDEN)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["boxes"] == 5
