"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each hot kernel on synthetic workloads and reports the median wall
time per backend plus the speedup of the compiled extension. Exits with
status 1 when the compiled backend is not built (nothing to compare).

    python3 benchmarks/bench_kernels.py --repeats 7 --iou-n 256
"""

import argparse
import math
import statistics
import sys
import time

import numpy as np

from omnibox.kernels import available_backends


def _boxes(rng, n):
    b = np.empty((n, 5), dtype=np.float64)
    b[:, 0:2] = rng.uniform(0.0, 200.0, size=(n, 2))
    b[:, 2] = rng.uniform(4.0, 30.0, size=n)
    b[:, 3] = b[:, 2] + rng.uniform(0.0, 30.0, size=n)
    b[:, 4] = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
    return b


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def build_workloads(args):
    rng = np.random.default_rng(args.seed)
    boxes_a = _boxes(rng, args.iou_n)
    boxes_b = _boxes(rng, args.iou_n)
    point_sets = [rng.uniform(0.0, 100.0, size=(args.mbr_points, 2))
                  for _ in range(args.mbr_sets)]
    image = rng.integers(0, 256, size=(args.warp_size, args.warp_size, 3),
                         dtype=np.uint8)
    qc = ((args.warp_size - 1) / 2.0, (args.warp_size - 1) / 2.0)
    f = args.warp_size / 2.5

    def iou(mod):
        mod.rotated_iou_matrix(boxes_a, boxes_b)

    def mbr(mod):
        for pts in point_sets:
            mod.min_area_rect_raw(mod.convex_hull(pts))

    def warp(mod):
        mod.fisheye_warp(image, f, qc[0], qc[1],
                         args.warp_size, args.warp_size)

    return [
        (f"rotated_iou_matrix {args.iou_n}x{args.iou_n}", iou),
        (f"hull+min_area_rect x{args.mbr_sets} ({args.mbr_points} pts)", mbr),
        (f"fisheye_warp {args.warp_size}^2", warp),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions per kernel (median reported)")
    parser.add_argument("--iou-n", type=int, default=256,
                        help="boxes per side of the IoU matrix")
    parser.add_argument("--mbr-sets", type=int, default=2000,
                        help="number of point sets for the rectangle fit")
    parser.add_argument("--mbr-points", type=int, default=64,
                        help="points per set")
    parser.add_argument("--warp-size", type=int, default=1024,
                        help="square image side for the fisheye warp")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; run pip install -e . first",
              file=sys.stderr)
        return 1

    width = 44
    print(f"{'kernel':<{width}} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, fn in build_workloads(args):
        t_pure = _median_time(lambda: fn(backends["pure"]), args.repeats)
        t_comp = _median_time(lambda: fn(backends["compiled"]), args.repeats)
        print(f"{label:<{width}} {t_pure * 1e3:>8.2f}ms {t_comp * 1e3:>8.2f}ms "
              f"{t_pure / t_comp:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
