"""Both kernel backends must produce bit-identical results.

The compiled extension mirrors the pure-Python arithmetic expression by
expression, so outputs are compared with ==, not a tolerance.
"""

import math

import numpy as np
import pytest

from omnibox.kernels import BACKEND, available_backends

BACKENDS = available_backends()


def _pair():
    if "compiled" not in BACKENDS:
        pytest.skip("compiled backend not built")
    return BACKENDS["pure"], BACKENDS["compiled"]


def test_backend_registry():
    assert "pure" in BACKENDS
    assert BACKEND in BACKENDS


def test_hull_bitwise():
    pure, comp = _pair()
    rng = np.random.default_rng(101)
    for n in (1, 2, 3, 4, 8, 40):
        for _ in range(25):
            pts = rng.uniform(-100, 100, size=(n, 2))
            a = pure.convex_hull(pts)
            b = comp.convex_hull(pts)
            assert a.shape == b.shape
            assert (a == b).all()
    # duplicates and collinear runs
    pts = np.array([(0, 0), (1, 1), (2, 2), (1, 1), (0, 2), (0, 0)], dtype=float)
    assert (pure.convex_hull(pts) == comp.convex_hull(pts)).all()


def test_min_area_rect_raw_bitwise():
    pure, comp = _pair()
    rng = np.random.default_rng(103)
    for _ in range(200):
        pts = rng.uniform(-50, 50, size=(rng.integers(3, 16), 2))
        hull = pure.convex_hull(pts)
        if len(hull) < 3:
            continue
        assert pure.min_area_rect_raw(hull) == comp.min_area_rect_raw(hull)


def test_polygon_intersection_area_bitwise():
    pure, comp = _pair()
    rng = np.random.default_rng(107)
    for _ in range(200):
        a = pure.convex_hull(rng.uniform(0, 10, size=(6, 2)))
        b = pure.convex_hull(rng.uniform(0, 10, size=(6, 2)))
        if len(a) < 3 or len(b) < 3:
            continue
        assert pure.polygon_intersection_area(a, b) == comp.polygon_intersection_area(a, b)


def test_rotated_iou_matrix_bitwise():
    pure, comp = _pair()
    rng = np.random.default_rng(109)
    boxes_a = np.column_stack(
        [
            rng.uniform(0, 20, 30),
            rng.uniform(0, 20, 30),
            rng.uniform(0.5, 6, 30),
            rng.uniform(0.5, 6, 30),
            rng.uniform(-math.pi / 2, math.pi / 2, 30),
        ]
    )
    boxes_b = boxes_a[:17] + 0.25
    a = pure.rotated_iou_matrix(boxes_a, boxes_b)
    b = comp.rotated_iou_matrix(boxes_a, boxes_b)
    assert (a == b).all()
    # the 45-degree square anchor must be exact in both
    sq = np.array([[0.0, 0.0, 2.0, 2.0, 0.0], [0.0, 0.0, 2.0, 2.0, math.pi / 4]])
    va = pure.rotated_iou_matrix(sq[:1], sq[1:])[0, 0]
    vb = comp.rotated_iou_matrix(sq[:1], sq[1:])[0, 0]
    assert va == vb
    assert abs(va - 1 / math.sqrt(2)) < 1e-9


def test_fisheye_warp_bitwise():
    pure, comp = _pair()
    rng = np.random.default_rng(113)
    img = rng.integers(0, 256, size=(37, 53, 3), dtype=np.uint8)
    for f, qcx, qcy, ow, oh in [
        (20.0, 26.0, 18.0, 53, 37),
        (8.5, 10.0, 30.0, 24, 24),
        (400.0, 26.5, 18.5, 40, 40),
    ]:
        oa, ma = pure.fisheye_warp(img, f, qcx, qcy, ow, oh)
        ob, mb = comp.fisheye_warp(img, f, qcx, qcy, ow, oh)
        assert (oa == ob).all()
        assert (ma == mb).all()
        assert oa.dtype == np.uint8 and ma.dtype == np.uint8


def test_env_override_selects_backend():
    import subprocess
    import sys

    for name in BACKENDS:
        out = subprocess.run(
            [sys.executable, "-c", "from omnibox.kernels import BACKEND; print(BACKEND)"],
            env={"PATH": "/usr/bin:/bin", "OMNIBOX_KERNELS": name},
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == name
