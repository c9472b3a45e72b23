"""Freeze a Monte-Carlo IoU oracle for random rotated-box pairs.

Writes tests/data/iou_mc_golden.json: 1000 box pairs (params rounded to 6
decimals, estimates computed on the rounded params) with a 10^6-sample
jittered-grid estimate of their IoU.  Samples are drawn only inside the
intersection of the two axis-aligned bounding boxes; if that region is
empty the IoU is exactly 0.

Run once; the output is committed.  Re-running with the same seed
reproduces the file.
"""

from __future__ import annotations

import json
import math
import pathlib

import numpy as np

from omnibox.geometry import RotatedBox, box_corners, rotated_iou

SEED = 20260815
N_PAIRS = 1000
GRID = 1000  # GRID^2 = 10^6 samples per pair
OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "iou_mc_golden.json"


def sample_pairs(rng: np.random.Generator) -> list[tuple[list[float], list[float]]]:
    pairs = []
    for _ in range(N_PAIRS):
        cxa, cya = rng.uniform(2.0, 8.0, size=2)
        # second center near the first so overlap, containment and
        # disjoint cases all occur
        cxb = cxa + rng.uniform(-4.0, 4.0)
        cyb = cya + rng.uniform(-4.0, 4.0)
        wa, ha = np.sort(rng.uniform(0.5, 5.0, size=2))
        wb, hb = np.sort(rng.uniform(0.5, 5.0, size=2))
        ta = rng.uniform(-math.pi / 2, math.pi / 2)
        tb = rng.uniform(-math.pi / 2, math.pi / 2)
        a = [round(v, 6) for v in (cxa, cya, wa, ha, ta)]
        b = [round(v, 6) for v in (cxb, cyb, wb, hb, tb)]
        pairs.append((a, b))
    return pairs


def _inside(px: np.ndarray, py: np.ndarray, box: list[float]) -> np.ndarray:
    cx, cy, w, h, t = box
    c, s = math.cos(t), math.sin(t)
    dx = px - cx
    dy = py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return (np.abs(lx) <= w / 2) & (np.abs(ly) <= h / 2)


def mc_iou(a: list[float], b: list[float], rng: np.random.Generator) -> float:
    ca = box_corners(RotatedBox(*a))
    cb = box_corners(RotatedBox(*b))
    x0 = max(ca[:, 0].min(), cb[:, 0].min())
    x1 = min(ca[:, 0].max(), cb[:, 0].max())
    y0 = max(ca[:, 1].min(), cb[:, 1].min())
    y1 = min(ca[:, 1].max(), cb[:, 1].max())
    if x0 >= x1 or y0 >= y1:
        return 0.0
    # one jittered sample per cell of a GRID x GRID partition of the region
    ix = np.tile(np.arange(GRID), GRID)
    iy = np.repeat(np.arange(GRID), GRID)
    px = x0 + (ix + rng.random(GRID * GRID)) * (x1 - x0) / GRID
    py = y0 + (iy + rng.random(GRID * GRID)) * (y1 - y0) / GRID
    hits = np.count_nonzero(_inside(px, py, a) & _inside(px, py, b))
    inter = hits / (GRID * GRID) * (x1 - x0) * (y1 - y0)
    area_a = a[2] * a[3]
    area_b = b[2] * b[3]
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def main() -> None:
    rng = np.random.default_rng(SEED)
    pairs = sample_pairs(rng)
    rows = []
    worst = 0.0
    for k, (a, b) in enumerate(pairs):
        est = mc_iou(a, b, np.random.default_rng((SEED, k)))
        exact = rotated_iou(RotatedBox(*a), RotatedBox(*b))
        worst = max(worst, abs(est - exact))
        rows.append({"a": a, "b": b, "mc_iou": est})
    payload = {
        "meta": {
            "pairs": N_PAIRS,
            "samples_per_pair": GRID * GRID,
            "sampler": "jittered-grid over the intersection of the two AABBs",
            "seed": SEED,
        },
        "pairs": rows,
    }
    OUT.write_text(json.dumps(payload) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({N_PAIRS} pairs)")
    print(f"max |analytic - mc| at freeze time: {worst:.3e}")


if __name__ == "__main__":
    main()
