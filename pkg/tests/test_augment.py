import math

import numpy as np
import pytest
import scipy.stats

from omnibox.annotations import ImageRecord, InstanceAnnotation
from omnibox.augment import (
    AugmentConfig,
    FisheyeParams,
    apply_fisheye_to_record,
    fisheye_forward_map,
    fisheye_inverse_map,
    map_segment_vertices,
    output_center,
    rotate_image,
    rotate_image_and_annotations,
    sample_geometry,
    sample_params,
    warp_image,
)
from omnibox.geometry import rotate_points


def _params(f, qc, out_w, out_h):
    return FisheyeParams(f=f, qc=qc, out_w=out_w, out_h=out_h)


def _record(instances, w=64, h=64):
    return ImageRecord(image_id=1, file="x.png", width=w, height=h, instances=tuple(instances))


def _inst(*segments):
    return InstanceAnnotation(
        image_id=1,
        category=1,
        segments=tuple(np.asarray(s, dtype=np.float64) for s in segments),
        upright_box=(0.0, 0.0, 1.0, 1.0),
        iscrowd=False,
    )


# ------------------------------------------------------------ projections


def test_forward_map_reference_value():
    p = _params(500.0, (0.0, 0.0), 10, 10)
    out = fisheye_forward_map((300.0, 0.0), p)
    # r/f = 0.6 rad, so the perspective radius is 500*tan(0.6)
    assert out[0] == pytest.approx(500.0 * math.tan(0.6), abs=1e-9)
    assert out[1] == 0.0
    assert fisheye_forward_map((0.0, 0.0), p) == (0.0, 0.0)


def test_forward_map_out_of_domain():
    p = _params(100.0, (0.0, 0.0), 10, 10)
    # at or past the hemisphere edge
    assert fisheye_forward_map((100.0 * math.pi / 2, 0.0), p) is None
    assert fisheye_forward_map((0.0, 1e6), p) is None
    # inside the hemisphere but off the source image
    assert fisheye_forward_map((140.0, 0.0), p, src_size=(64, 64)) is None


def test_round_trip():
    p = _params(80.0, (31.5, 31.5), 64, 64)
    rng = np.random.default_rng(47)
    for _ in range(300):
        qe = rng.uniform(-60, 60, size=2)
        if math.hypot(*qe) >= p.f * math.pi / 2:
            continue
        fwd = fisheye_forward_map(qe, p)
        back = fisheye_inverse_map(fwd, p)
        assert back[0] == pytest.approx(qe[0], abs=1e-9)
        assert back[1] == pytest.approx(qe[1], abs=1e-9)
    # and the other composition, starting from source points
    for _ in range(300):
        qp = rng.uniform(0, 63, size=2)
        ex = fisheye_inverse_map(qp, p)
        fwd = fisheye_forward_map(ex, p)
        assert fwd[0] == pytest.approx(qp[0], abs=1e-9)
        assert fwd[1] == pytest.approx(qp[1], abs=1e-9)


def test_inverse_map_examples():
    p = _params(500.0, (10.0, 20.0), 10, 10)
    assert fisheye_inverse_map((10.0, 20.0), p) == (0.0, 0.0)
    ex = fisheye_inverse_map((10.0 + 500.0 * math.tan(0.6), 20.0), p)
    assert ex[0] == pytest.approx(300.0, abs=1e-9)
    assert ex[1] == 0.0


# ------------------------------------------------------------ warping


def test_warp_constant_image_stays_constant():
    src = np.full((40, 40, 3), (10, 200, 77), dtype=np.uint8)
    out, mask = warp_image(src, _params(12.0, (19.5, 19.5), 40, 40))
    assert mask.shape == (40, 40)
    assert mask.min() == 0  # small f: corners leave the hemisphere
    valid = mask.astype(bool)
    assert (out[valid] == (10, 200, 77)).all()
    assert (out[~valid] == 0).all()


def test_warp_large_f_is_identity_crop():
    # out canvas smaller than the source with the axis at the source
    # center: the warp degenerates to a centered crop as f grows
    rng = np.random.default_rng(53)
    src = rng.integers(0, 256, size=(48, 48, 3), dtype=np.uint8)
    out, mask = warp_image(src, _params(1e8, (23.5, 23.5), 40, 40))
    assert mask.all()
    crop = src[4:44, 4:44]
    assert np.abs(out.astype(int) - crop.astype(int)).max() <= 1


def test_warp_center_row_preserved():
    # rows of constant color: the optical-axis row only resamples itself
    src = np.zeros((33, 33, 3), dtype=np.uint8)
    src[:, :, 0] = (np.arange(33) * 7 % 256)[:, None].astype(np.uint8)
    out, mask = warp_image(src, _params(20.0, (16.0, 16.0), 33, 33))
    ocy = 16
    row = out[ocy]
    valid = mask[ocy].astype(bool)
    assert valid.any()
    assert (row[valid, 0] == src[16, 0, 0]).all()
    assert (row[valid, 1] == 0).all()


def test_warp_input_validation():
    good = np.zeros((8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        warp_image(good.astype(np.float32), _params(5.0, (3.5, 3.5), 8, 8))
    with pytest.raises(ValueError):
        warp_image(np.zeros((8, 8), dtype=np.uint8), _params(5.0, (3.5, 3.5), 8, 8))
    with pytest.raises(ValueError):
        warp_image(good, _params(5.0, (30.0, 3.5), 8, 8))
    with pytest.raises(ValueError):
        _params(-1.0, (3.5, 3.5), 8, 8)
    with pytest.raises(ValueError):
        _params(5.0, (3.5, 3.5), 0, 8)


# ------------------------------------------------------------ vertex mapping


def test_map_segment_vertices_matches_exhaustive_argmin():
    p = _params(15.0, (23.0, 24.5), 48, 48)
    ocx, ocy = output_center(p)
    # forward positions of every output grid point
    fwd = np.full((48, 48, 2), np.inf)
    for gy in range(48):
        for gx in range(48):
            hit = fisheye_forward_map((gx - ocx, gy - ocy), p, src_size=(48, 48))
            if hit is not None:
                fwd[gy, gx] = hit
    rng = np.random.default_rng(59)
    verts = rng.uniform(10, 38, size=(40, 2))
    mapped = map_segment_vertices(verts, p)
    assert mapped.shape == (40, 2)
    for v, m in zip(verts, mapped):
        d2 = (fwd[:, :, 0] - v[0]) ** 2 + (fwd[:, :, 1] - v[1]) ** 2
        gy, gx = np.unravel_index(np.argmin(d2), d2.shape)
        assert abs(m[0] - gx) <= 1
        assert abs(m[1] - gy) <= 1


def test_map_segment_vertices_drops_outside_canvas():
    # tiny canvas: distant vertices round off it and disappear
    p = _params(50.0, (31.5, 31.5), 8, 8)
    out = map_segment_vertices(np.array([[31.5, 31.5], [0.0, 0.0]]), p)
    assert out.shape == (1, 2)
    # the axis lands on the canvas center 3.5; the exact half rounds up
    assert out[0].tolist() == [4.0, 4.0]
    none = map_segment_vertices(np.array([[0.0, 0.0]]), p)
    assert none.shape == (0, 2)


def test_apply_fisheye_to_record():
    p = _params(40.0, (31.5, 31.5), 32, 32)
    near = [(28, 28), (36, 28), (36, 36), (28, 36)]
    far = [(0, 0), (2, 0), (2, 2)]
    rec = _record([_inst(near), _inst(far)])
    out = apply_fisheye_to_record(rec, p)
    assert (out.width, out.height) == (32, 32)
    assert len(out.instances) == 2
    assert len(out.instances[0].segments) == 1
    assert out.instances[0].upright_box is None
    # the far triangle collapses off-canvas: instance becomes excluded
    assert out.instances[1].segments == ()
    assert out.instances[1].excluded


# ------------------------------------------------------------ rotation


def test_rotate_image_zero_is_identity_copy():
    img = np.arange(27, dtype=np.uint8).reshape(3, 3, 3)
    out = rotate_image(img, 0.0)
    assert (out == img).all()
    assert out is not img


def test_rotate_image_quarter_turn_permutes_pixels():
    rng = np.random.default_rng(61)
    img = rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8)
    out = rotate_image(img, math.pi / 2)
    c = 2.0
    for y in range(5):
        for x in range(5):
            # forward transform of the pixel position (snapped trig: exact)
            qx = int(c + 0.0 * (x - c) - 1.0 * (y - c))
            qy = int(c + 1.0 * (x - c) + 0.0 * (y - c))
            assert (out[qy, qx] == img[y, x]).all()


def test_rotate_image_full_turn_identity():
    rng = np.random.default_rng(67)
    img = rng.integers(0, 256, size=(9, 9, 3), dtype=np.uint8)
    assert (rotate_image(img, 2 * math.pi) == img).all()


def test_rotate_record_segments_follow_rotate_points():
    seg = [(10, 5), (30, 5), (30, 55), (10, 55)]
    rec = _record([_inst(seg)])
    img = np.zeros((64, 64, 3), dtype=np.uint8)
    angle = 0.7
    _, out_rec = rotate_image_and_annotations(rec, img, angle)
    expect = rotate_points(np.asarray(seg, float), angle, (31.5, 31.5))
    got = out_rec.instances[0].segments[0]
    assert np.allclose(got, expect, atol=1e-12)
    assert out_rec.instances[0].upright_box is None


def test_rotate_record_zero_angle_returns_original_record():
    rec = _record([_inst([(1, 1), (2, 1), (2, 2)])])
    img = np.zeros((64, 64, 3), dtype=np.uint8)
    out_img, out_rec = rotate_image_and_annotations(rec, img, 0.0)
    assert out_rec is rec
    assert out_img is not img


def test_rotate_record_dimension_mismatch():
    rec = _record([_inst([(1, 1), (2, 1), (2, 2)])], w=32, h=32)
    with pytest.raises(ValueError):
        rotate_image_and_annotations(rec, np.zeros((64, 64, 3), dtype=np.uint8), 0.3)


# ------------------------------------------------------------ sampling


def test_sample_params_deterministic_and_in_range():
    cfg = AugmentConfig(seed=7)
    a, next_state = sample_params(cfg, 640, 480, 0)
    b, _ = sample_params(cfg, 640, 480, 0)
    assert a == b
    assert next_state == 1
    c, _ = sample_params(cfg, 640, 480, 1)
    assert c != a
    half_diag = 0.5 * math.hypot(640, 480)
    assert 0.4 * half_diag <= a.f <= 1.2 * half_diag
    assert abs(a.qc[0] - 319.5) <= 0.10 * 640
    assert abs(a.qc[1] - 239.5) <= 0.10 * 480
    assert (a.out_w, a.out_h) == (480, 480)


def test_sample_params_documented_draw_order():
    cfg = AugmentConfig(seed=123, f_range=(0.5, 1.0), qc_jitter=0.2, out_size=96)
    params, _ = sample_params(cfg, 100, 100, 5)
    u = np.random.default_rng((123, 1, 5)).uniform(size=3)
    half_diag = 0.5 * math.hypot(100, 100)
    assert params.f == (0.5 + 0.5 * u[0]) * half_diag
    assert params.qc[0] == 49.5 + (2 * u[1] - 1) * 0.2 * 100
    assert params.qc[1] == 49.5 + (2 * u[2] - 1) * 0.2 * 100
    assert params.out_w == 96


def test_sample_params_zero_jitter_centers_axis():
    cfg = AugmentConfig(seed=3, qc_jitter=0.0)
    params, _ = sample_params(cfg, 33, 65, 0)
    assert params.qc == (16.0, 32.0)


def test_sample_geometry_deterministic_and_uniform():
    cfg = AugmentConfig(seed=11, rotation_range=(-math.pi, math.pi))
    a0, coin0, nxt = sample_geometry(cfg, 0)
    a1, coin1, _ = sample_geometry(cfg, 0)
    assert (a0, coin0) == (a1, coin1)
    assert nxt == 1
    angles = np.array([sample_geometry(cfg, s)[0] for s in range(2000)])
    assert (angles >= -math.pi).all() and (angles < math.pi).all()
    u = (angles + math.pi) / (2 * math.pi)
    assert scipy.stats.kstest(u, "uniform").pvalue > 0.01


def test_sample_geometry_coin_respects_probability():
    always = AugmentConfig(seed=13, fisheye_probability=1.0)
    never = AugmentConfig(seed=13, fisheye_probability=0.0)
    half = AugmentConfig(seed=13, fisheye_probability=0.5)
    coins_always = [sample_geometry(always, s)[1] for s in range(500)]
    coins_never = [sample_geometry(never, s)[1] for s in range(500)]
    coins_half = [sample_geometry(half, s)[1] for s in range(2000)]
    assert all(coins_always)
    assert not any(coins_never)
    rate = sum(coins_half) / len(coins_half)
    assert 0.45 < rate < 0.55


def test_geometry_and_fisheye_streams_independent():
    cfg = AugmentConfig(seed=21)
    angle, _, _ = sample_geometry(cfg, 0)
    params, _ = sample_params(cfg, 64, 64, 0)
    # same counter, different streams: draws must not coincide
    u_geom = np.random.default_rng((21, 0, 0)).uniform(size=2)
    u_fish = np.random.default_rng((21, 1, 0)).uniform(size=3)
    assert abs(u_geom[0] - u_fish[0]) > 1e-12
    assert angle == -math.pi + 2 * math.pi * u_geom[0]


def test_augment_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(rotation_range=(1.0, 0.0))
    with pytest.raises(ValueError):
        AugmentConfig(fisheye_probability=1.5)
    with pytest.raises(ValueError):
        AugmentConfig(f_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        AugmentConfig(f_range=(1.0, 0.5))
    with pytest.raises(ValueError):
        AugmentConfig(qc_jitter=-0.1)
