"""Build the bundled toy dataset: COCO annotations, images, golden boxes.

Writes tests/data/toy_coco.json, tests/data/images/*.png and the golden
gen-boxes output tests/data/toy_boxes_golden.json. All content is
deterministic; the golden file is produced by the same pipeline the CLI
runs and is hand-checked against closed-form box values in the test suite.

Usage:
    python scripts/make_toy_data.py [--root tests/data]
"""

import argparse
import json
import math
import os
import sys

import numpy as np
from PIL import Image

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from omnibox.annotations import load_coco  # noqa: E402
from omnibox.boxgen import generate_dataset  # noqa: E402
from omnibox.annotations import save_rotated_dataset  # noqa: E402


def flat(points):
    return [round(float(v), 2) for xy in points for v in xy]


def rotated_rect(cx, cy, w, h, theta):
    """Corner list of a rotated rectangle, counter-clockwise."""
    c = math.cos(theta)
    s = math.sin(theta)
    pts = []
    for lx, ly in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2),
                   (-w / 2, h / 2)):
        pts.append((cx + c * lx - s * ly, cy + s * lx + c * ly))
    return pts


def toy_coco() -> dict:
    images = [
        {"id": 1, "file_name": "scene_a.png", "width": 64, "height": 64},
        {"id": 2, "file_name": "scene_b.png", "width": 64, "height": 64},
        {"id": 3, "file_name": "scene_c.png", "width": 64, "height": 64},
        {"id": 4, "file_name": "scene_d.png", "width": 64, "height": 64},
    ]
    anns = []

    def add(img, cat, segs, iscrowd=0):
        x = min(p for seg in segs for p in seg[0::2]) if segs else 0
        y = min(p for seg in segs for p in seg[1::2]) if segs else 0
        anns.append({"id": len(anns) + 1, "image_id": img, "category_id": cat,
                     "segmentation": segs, "iscrowd": iscrowd,
                     "bbox": [x, y, 1, 1], "area": 1})

    # image 1: an upright 20x50 rectangle and a tilted 10x20 rectangle
    add(1, 1, [flat([(10, 5), (30, 5), (30, 55), (10, 55)])])
    tilted = rotated_rect(44.0, 36.0, 10.0, 20.0, math.atan2(3.0, 4.0))
    add(1, 1, [flat(tilted)])
    # crowd region (RLE): present in the file, excluded from box generation
    anns.append({"id": len(anns) + 1, "image_id": 1, "category_id": 1,
                 "segmentation": {"size": [64, 64], "counts": "0f04d=`1"},
                 "iscrowd": 1, "bbox": [0, 0, 8, 8], "area": 64})
    # a non-person annotation that must be filtered out
    add(1, 2, [flat([(1, 1), (9, 1), (9, 9), (1, 9)])])

    # image 2: an L-shaped polygon and a small diamond
    add(2, 1, [flat([(8, 8), (40, 8), (40, 16), (16, 16), (16, 48), (8, 48)])])
    add(2, 1, [flat([(42, 48), (48, 42), (54, 48), (48, 54)])])
    # degenerate: collinear points, dropped as sub-pixel
    add(2, 1, [flat([(60, 10), (60, 20), (60, 30)])])

    # image 3: one pedestrian split into two polygons by occlusion
    add(3, 1, [flat([(20, 10), (32, 10), (32, 26), (20, 26)]),
               flat([(20, 34), (32, 34), (32, 50), (20, 50)])])

    # image 4 holds no person label at all and must not be ingested
    add(4, 2, [flat([(5, 5), (20, 5), (20, 20), (5, 20)])])

    return {
        "info": {"description": "toy instances for pipeline tests"},
        "images": images,
        "annotations": anns,
        "categories": [{"id": 1, "name": "person"},
                       {"id": 2, "name": "bench"}],
    }


def toy_image(seed: int, size: int = 64) -> np.ndarray:
    """Deterministic structured test image: gradient + blocks."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    img = np.stack([
        (xx * 255 / (size - 1)).astype(np.uint8),
        (yy * 255 / (size - 1)).astype(np.uint8),
        ((xx + yy) * 255 / (2 * size - 2)).astype(np.uint8),
    ], axis=-1)
    for _ in range(6):
        x, y = rng.integers(0, size - 12, size=2)
        color = rng.integers(0, 256, size=3, dtype=np.uint8)
        img[y:y + 10, x:x + 10] = color
    return img


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=os.path.join("tests", "data"))
    args = ap.parse_args(argv)

    os.makedirs(os.path.join(args.root, "images"), exist_ok=True)
    coco_path = os.path.join(args.root, "toy_coco.json")
    with open(coco_path, "w", encoding="utf-8") as fh:
        json.dump(toy_coco(), fh, indent=2)
        fh.write("\n")

    for seed, name in ((11, "scene_a"), (22, "scene_b"), (33, "scene_c"),
                       (44, "scene_d")):
        Image.fromarray(toy_image(seed)).save(
            os.path.join(args.root, "images", f"{name}.png"))

    records, load_report = load_coco(coco_path, "person")
    entries, gen_report = generate_dataset(records)
    golden = os.path.join(args.root, "toy_boxes_golden.json")
    save_rotated_dataset(entries, golden)
    print(f"wrote {coco_path}")
    print(f"wrote {golden}")
    print("load:", load_report.as_dict())
    print("generate:", gen_report.as_dict())
    return 0


if __name__ == "__main__":
    sys.exit(main())
