"""omnibox command-line interface.

Subcommands: gen-boxes, augment, match-loss, evaluate, stats. Machine
output is JSON on stdout; progress and diagnostics go to stderr. Exit
codes: 0 success, 1 parse/validation error, 2 I/O error, 3 partial success
(some records failed).

Every flag can also be given through ``--config FILE`` where the file holds
``key = value`` lines (keys are the long flag names without the leading
dashes, '#' starts a comment). Command-line flags win over the file.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import augment as aug
from . import evaluation as ev
from .annotations import (FormatError, load_coco, load_internal,
                          load_rotated_gt, save_rotated_dataset)
from .boxgen import generate_dataset
from .geometry import AxisBox
from .matching_loss import (GroundTruthEntry, LossWeights, Prediction,
                            compute_loss, pad_ground_truth)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_IO = 2
EXIT_PARTIAL = 3


def _float_pair(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnibox",
        description="Rotated-box dataset tooling: box generation from "
                    "segmentations, fisheye/rotation augmentation, matching "
                    "loss, and AP evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-boxes",
                       help="generate rotated boxes from COCO segmentations")
    p.add_argument("--coco", required=True, help="COCO annotation JSON")
    p.add_argument("--out", required=True, help="output internal-json path")
    p.add_argument("--category", default="person", help="category name to keep")
    p.add_argument("--min-visibility", type=float, default=0.25,
                   help="drop boxes with a smaller in-image area fraction")
    p.add_argument("--keep-degenerate", action="store_true",
                   help="keep boxes under 1 px^2")
    _add_config_flag(p)

    p = sub.add_parser("augment",
                       help="rotate + fisheye-distort images and annotations")
    p.add_argument("--coco", required=True, help="COCO annotation JSON")
    p.add_argument("--images", required=True, help="source image directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--category", default="person")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rotation-range", type=_float_pair, default=(-180.0, 180.0),
                   metavar="LO,HI", help="rotation range in degrees")
    p.add_argument("--probability", type=float, default=1.0,
                   help="per-image fisheye probability")
    p.add_argument("--f-range", type=_float_pair, default=(0.4, 1.2),
                   metavar="LO,HI",
                   help="focal range in multiples of the half-diagonal")
    p.add_argument("--qc-jitter", type=float, default=0.10,
                   help="optical-axis jitter as a fraction of image size")
    p.add_argument("--out-size", type=int, default=None,
                   help="square output canvas side (default min(W,H))")
    p.add_argument("--fixed-f", type=float, default=None,
                   help="bypass sampling: fixed focal length in pixels")
    p.add_argument("--fixed-qc", type=_float_pair, default=None, metavar="X,Y",
                   help="bypass sampling: fixed optical-axis position")
    p.add_argument("--dump-segments", action="store_true",
                   help="also write transformed segment vertices "
                        "(segments.json)")
    p.add_argument("--write-masks", action="store_true",
                   help="also write validity masks (<image>_mask.png)")
    p.add_argument("--min-visibility", type=float, default=0.25)
    p.add_argument("--workers", type=int, default=None,
                   help="parallelism bound (the current pipeline is "
                        "sequential; accepted for compatibility)")
    _add_config_flag(p)

    p = sub.add_parser("match-loss",
                       help="Hungarian-matched loss between GT and predictions")
    p.add_argument("--gt", required=True, help="ground-truth internal-json")
    p.add_argument("--pred", required=True,
                   help="prediction internal-json (with scores)")
    p.add_argument("--lambda-c", type=float, default=2.0)
    p.add_argument("--lambda-b", type=float, default=5.0)
    p.add_argument("--lambda-u", type=float, default=2.0)
    p.add_argument("--lambda-a", type=float, default=0.1)
    _add_config_flag(p)

    p = sub.add_parser("evaluate", help="rotated-box AP metrics")
    p.add_argument("--gt", required=True, help="ground-truth internal-json")
    p.add_argument("--pred", required=True,
                   help="prediction internal-json (with scores)")
    p.add_argument("--strata", choices=("distance", "angle"), default=None,
                   help="add position-binned AP50 under the rotation protocol")
    p.add_argument("--rotate-interval", type=float, default=5.0,
                   help="rotation protocol step in degrees (0 = no rotation)")
    p.add_argument("--distance-bins", type=int, default=5)
    p.add_argument("--angle-bin-deg", type=float, default=45.0)
    p.add_argument("--interpolation", choices=("101", "all"), default="101")
    _add_config_flag(p)

    p = sub.add_parser("stats", help="summarize a rotated-box dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("internal-json", "cepdof-json"),
                   default="internal-json")
    _add_config_flag(p)

    return parser


def _add_config_flag(p):
    p.add_argument("--config", default=None,
                   help="key=value file mirroring the flags; flags win")


def _splice_config(argv):
    """Insert config-file entries as flags before the user's flags.

    argparse takes the last occurrence of a flag, so file values are
    defaults and explicit flags override them.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at == 0 or at + 1 >= len(argv):
        return argv  # let argparse report the problem
    path = argv[at + 1]
    rest = argv[:at] + argv[at + 2:]
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}: expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    tokens.append(flag)
            else:
                tokens.extend([flag, value])
    return [rest[0]] + tokens + rest[1:]


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=False)
    sys.stdout.write("\n")


def _log(msg):
    print(msg, file=sys.stderr)


def cmd_gen_boxes(args) -> int:
    records, load_report = load_coco(args.coco, args.category)
    entries, gen_report = generate_dataset(
        records, min_visibility=args.min_visibility,
        drop_degenerate=not args.keep_degenerate)
    save_rotated_dataset(entries, args.out)
    if not records:
        _log(f"warning: no images with category {args.category!r} in "
             f"{args.coco}; wrote an empty dataset")
    _emit({"out": args.out, "load": load_report.as_dict(),
           "generate": gen_report.as_dict()})
    return EXIT_OK


def _out_image_name(record) -> str:
    stem = Path(record.file).stem if record.file else ""
    return f"{stem or record.image_id}.png"


def cmd_augment(args) -> int:
    from PIL import Image

    config = aug.AugmentConfig(
        rotation_range=(math.radians(args.rotation_range[0]),
                        math.radians(args.rotation_range[1])),
        fisheye_probability=args.probability,
        f_range=args.f_range,
        qc_jitter=args.qc_jitter,
        out_size=args.out_size,
        seed=args.seed)
    if (args.fixed_f is None) != (args.fixed_qc is None):
        raise ValueError("--fixed-f and --fixed-qc must be given together")

    records, load_report = load_coco(args.coco, args.category)
    os.makedirs(args.out, exist_ok=True)
    failures = []
    transformed = []
    seg_dump = []
    for index, rec in enumerate(records):
        src_path = os.path.join(args.images, rec.file)
        try:
            with Image.open(src_path) as im:
                image = np.asarray(im.convert("RGB"))
        except OSError as e:
            failures.append({"id": rec.image_id, "file": rec.file,
                             "error": str(e)})
            _log(f"warning: skipping image {rec.image_id}: {e}")
            continue
        angle, apply_fisheye, _ = aug.sample_geometry(config, index)
        image, rec = aug.rotate_image_and_annotations(rec, image, angle)
        if args.fixed_f is not None:
            side = args.out_size if args.out_size else min(rec.width, rec.height)
            params = aug.FisheyeParams(f=args.fixed_f, qc=args.fixed_qc,
                                       out_w=side, out_h=side)
            apply_fisheye = True
        elif apply_fisheye:
            params, _ = aug.sample_params(config, rec.width, rec.height,
                                          state=index)
        if apply_fisheye:
            image, mask = aug.warp_image(image, params)
            rec = aug.apply_fisheye_to_record(rec, params)
        else:
            mask = np.ones(image.shape[:2], dtype=np.uint8)
        name = _out_image_name(rec)
        rec = replace(rec, file=name)
        Image.fromarray(image).save(os.path.join(args.out, name))
        if args.write_masks:
            mask_name = f"{Path(name).stem}_mask.png"
            Image.fromarray(mask * 255).save(os.path.join(args.out, mask_name))
        if args.dump_segments:
            seg_dump.append({
                "id": rec.image_id,
                "instances": [[[[round(float(x), 6), round(float(y), 6)]
                                for x, y in seg] for seg in inst.segments]
                              for inst in rec.instances],
            })
        transformed.append(rec)

    entries, gen_report = generate_dataset(transformed,
                                           min_visibility=args.min_visibility)
    save_rotated_dataset(entries, os.path.join(args.out, "annotations.json"))
    if args.dump_segments:
        with open(os.path.join(args.out, "segments.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"images": seg_dump}, fh, indent=2)
            fh.write("\n")
    _emit({"out_dir": args.out, "images": len(transformed),
           "failures": failures, "load": load_report.as_dict(),
           "generate": gen_report.as_dict()})
    return EXIT_PARTIAL if failures else EXIT_OK


def _check_id_sets(gt_entries, pred_entries) -> list:
    gt_ids = {e.image_id for e in gt_entries}
    pred_ids = {e.image_id for e in pred_entries}
    problems = []
    only_gt = gt_ids - pred_ids
    only_pred = pred_ids - gt_ids
    if only_gt:
        problems.append(f"images only in GT file: {sorted(map(str, only_gt))}")
    if only_pred:
        problems.append(
            f"images only in prediction file: {sorted(map(str, only_pred))}")
    return problems


def _clamp01(v, counter):
    if v < 0.0:
        counter[0] += 1
        return 0.0
    if v > 1.0:
        counter[0] += 1
        return 1.0
    return v


def cmd_match_loss(args) -> int:
    weights = LossWeights(args.lambda_c, args.lambda_b, args.lambda_u,
                          args.lambda_a)
    gt_entries = load_internal(args.gt)
    pred_entries = load_internal(args.pred)
    problems = _check_id_sets(gt_entries, pred_entries)
    if problems:
        for p in problems:
            _log(f"error: {p}")
        return EXIT_PARSE
    preds_by_id = {e.image_id: e for e in pred_entries}
    clamped = [0]
    skipped_zero_gt = 0
    per_image = {}
    sums = {"class_loss": 0.0, "box_l1": 0.0, "giou_loss": 0.0,
            "angle_loss": 0.0}
    total_real = 0
    for gt_e in gt_entries:
        pred_e = preds_by_id[gt_e.image_id]
        if pred_e.scores is None:
            _log(f"error: image {gt_e.image_id}: prediction boxes have no "
                 "scores")
            return EXIT_PARSE
        w, h = gt_e.width, gt_e.height
        if (pred_e.width, pred_e.height) != (w, h):
            _log(f"error: image {gt_e.image_id}: GT {w}x{h} vs prediction "
                 f"{pred_e.width}x{pred_e.height}")
            return EXIT_PARSE
        if not gt_e.boxes:
            if pred_e.boxes:
                skipped_zero_gt += 1
                _log(f"warning: image {gt_e.image_id} has predictions but no "
                     "ground truths; skipped (loss normalization needs real "
                     "targets)")
            continue
        if len(gt_e.boxes) > len(pred_e.boxes):
            _log(f"error: image {gt_e.image_id}: {len(gt_e.boxes)} ground "
                 f"truths exceed {len(pred_e.boxes)} predictions")
            return EXIT_PARSE
        gts = [GroundTruthEntry(
                   class_onehot=(1,),
                   box=AxisBox(_clamp01(b.cx / w, clamped),
                               _clamp01(b.cy / h, clamped),
                               b.w / w, b.h / h),
                   theta=b.theta)
               for b in gt_e.boxes]
        preds = [Prediction(class_probs=(score,),
                            box=AxisBox(_clamp01(b.cx / w, clamped),
                                        _clamp01(b.cy / h, clamped),
                                        b.w / w, b.h / h),
                            a_hat=(b.theta + math.pi) / (2.0 * math.pi))
                 for b, score in zip(pred_e.boxes, pred_e.scores)]
        breakdown = compute_loss(pad_ground_truth(gts, len(preds)), preds,
                                 weights)
        per_image[str(gt_e.image_id)] = breakdown.as_dict()
        n_real = len(gts)
        total_real += n_real
        for key in sums:
            sums[key] += getattr(breakdown, key) * n_real
    if total_real == 0:
        _log("error: no image with at least one ground-truth box")
        return EXIT_PARSE
    agg = {key: sums[key] / total_real for key in sums}
    agg["total"] = (weights.lambda_c * agg["class_loss"]
                    + weights.lambda_b * agg["box_l1"]
                    + weights.lambda_u * agg["giou_loss"]
                    + weights.lambda_a * agg["angle_loss"])
    _emit({"weights": {"lambda_c": weights.lambda_c,
                       "lambda_b": weights.lambda_b,
                       "lambda_u": weights.lambda_u,
                       "lambda_a": weights.lambda_a},
           "aggregate": agg, "images": per_image,
           "skipped_zero_gt": skipped_zero_gt,
           "clamped_normalized_centers": clamped[0]})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gt_entries = load_internal(args.gt)
    pred_entries = load_internal(args.pred)
    problems = _check_id_sets(gt_entries, pred_entries)
    if problems:
        for p in problems:
            _log(f"error: {p}")
        return EXIT_PARSE
    dets = ev.detections_from_entries(pred_entries)
    report = ev.coco_ap(dets, gt_entries, interpolation=args.interpolation)
    payload = report.as_dict()
    if args.strata:
        sizes = {e.image_id: (e.width, e.height) for e in gt_entries}
        dist_table, ang_table = ev.stratified_ap50(
            dets, gt_entries, sizes,
            n_distance_bins=args.distance_bins,
            angle_bin_deg=args.angle_bin_deg,
            rotate_interval_deg=args.rotate_interval,
            interpolation=args.interpolation)
        if args.strata == "distance":
            payload["distance_bins"] = [dict(b) for b in dist_table]
        else:
            payload["angle_bins"] = [dict(b) for b in ang_table]
    _emit(payload)
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.format == "internal-json":
        entries = load_internal(args.input)
        images = len(entries)
        boxes = [b for e in entries for b in e.boxes]
        scored = sum(1 for e in entries if e.scores is not None)
    else:
        gts = load_rotated_gt(args.input, args.format)
        images = len(gts)
        boxes = [b for g in gts for b in g.boxes]
        scored = 0
    payload = {"images": images, "boxes": len(boxes),
               "boxes_per_image": (len(boxes) / images) if images else 0.0,
               "scored_images": scored}
    if boxes:
        areas = np.array([b.area for b in boxes])
        angles = np.array([math.degrees(b.theta) for b in boxes])
        hist, edges = np.histogram(angles, bins=8, range=(-90.0, 90.0))
        payload["area"] = {"min": float(areas.min()),
                           "median": float(np.median(areas)),
                           "max": float(areas.max())}
        payload["strata"] = {
            "small": int(np.count_nonzero(areas < ev.AREA_SMALL_MAX)),
            "medium": int(np.count_nonzero((areas >= ev.AREA_SMALL_MAX)
                                           & (areas <= ev.AREA_MEDIUM_MAX))),
            "large": int(np.count_nonzero(areas > ev.AREA_MEDIUM_MAX)),
        }
        payload["angle_deg_histogram"] = {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in hist],
        }
    _emit(payload)
    return EXIT_OK


_COMMANDS = {
    "gen-boxes": cmd_gen_boxes,
    "augment": cmd_augment,
    "match-loss": cmd_match_loss,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _splice_config(argv)
    except FormatError as e:
        _log(f"error: {e}")
        return EXIT_PARSE
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as e:
        _log(f"error: {e}")
        return EXIT_PARSE
    except ValueError as e:
        _log(f"error: {e}")
        return EXIT_PARSE
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
