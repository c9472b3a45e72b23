"""Image and annotation co-transformations.

Two augmentations, applied rotation-first:

* random rotation about the image center (same canvas, bilinear, black
  fill), with segment vertices rotated by the exact same transform;
* pseudo-fisheye distortion mapping a perspective source onto an
  equidistant-projection canvas (r_src = f·tan(r_out/f)), with segment
  vertices remapped through the analytic inverse (r_out = f·atan(r_src/f))
  and snapped to the nearest output grid point.

Randomness is counter-based: each (seed, stream, index) triple opens an
independent generator, so any image's parameters can be reproduced without
replaying the stream.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .annotations import ImageRecord, InstanceAnnotation

# rng stream tags: geometry draws (angle, fisheye coin) vs fisheye params
_STREAM_GEOM = 0
_STREAM_FISHEYE = 1

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class FisheyeParams:
    """Equidistant-warp parameters.

    f: focal length in pixels; qc: optical-axis position in source-image
    pixel coordinates; out_w, out_h: output canvas in pixels.
    """

    f: float
    qc: tuple
    out_w: int
    out_h: int

    def __post_init__(self):
        if not (math.isfinite(self.f) and self.f > 0.0):
            raise ValueError(f"focal length must be positive, got {self.f}")
        if len(self.qc) != 2 or not all(math.isfinite(v) for v in self.qc):
            raise ValueError(f"invalid optical-axis position {self.qc}")
        if self.out_w < 1 or self.out_h < 1:
            raise ValueError(f"empty output canvas {self.out_w}x{self.out_h}")


@dataclass(frozen=True)
class AugmentConfig:
    """Sampling ranges for the augmentation pipeline.

    f_range is in multiples of the source half-diagonal; qc_jitter is the
    maximum optical-axis offset as a fraction of each image dimension;
    rotation_range is in radians, half-open [lo, hi).
    """

    rotation_range: tuple = (-math.pi, math.pi)
    fisheye_probability: float = 1.0
    f_range: tuple = (0.4, 1.2)
    qc_jitter: float = 0.10
    out_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.rotation_range[0] <= self.rotation_range[1]:
            raise ValueError(f"empty rotation range {self.rotation_range}")
        if not 0.0 <= self.fisheye_probability <= 1.0:
            raise ValueError(
                f"fisheye probability outside [0,1]: {self.fisheye_probability}")
        if not 0.0 < self.f_range[0] <= self.f_range[1]:
            raise ValueError(f"invalid f range {self.f_range}")
        if self.qc_jitter < 0.0:
            raise ValueError(f"negative qc jitter {self.qc_jitter}")


def fisheye_forward_map(qe, params: FisheyeParams, src_size=None):
    """Map an output-canvas point (relative to its optical axis) to the source.

    Args:
        qe: (x, y) relative to the output-image optical axis.
        params: warp parameters.
        src_size: optional (width, height); when given, points landing
            outside the source image count as out-of-domain.

    Returns:
        Source-image (x, y), or None when the ray leaves the hemisphere
        (‖qe‖/f ≥ π/2) or the mapped point is outside src_size.
    """
    x, y = float(qe[0]), float(qe[1])
    r = math.hypot(x, y)
    theta = r / params.f
    if theta >= _HALF_PI:
        return None
    scale = params.f * math.tan(theta) / r if r > 0.0 else 1.0
    px = x * scale + params.qc[0]
    py = y * scale + params.qc[1]
    if src_size is not None:
        if not (0.0 <= px <= src_size[0] - 1.0 and 0.0 <= py <= src_size[1] - 1.0):
            return None
    return (px, py)


def fisheye_inverse_map(qp, params: FisheyeParams):
    """Map a source-image point to output-canvas coordinates (axis-relative).

    Total inverse of fisheye_forward_map: r_out = f·atan(r_src/f). The
    optical axis maps to the origin.
    """
    dx = float(qp[0]) - params.qc[0]
    dy = float(qp[1]) - params.qc[1]
    r = math.hypot(dx, dy)
    if r == 0.0:
        return (0.0, 0.0)
    scale = params.f * math.atan2(r, params.f) / r
    return (dx * scale, dy * scale)


def warp_image(src: np.ndarray, params: FisheyeParams):
    """Fisheye-warp an (H, W, 3) uint8 image.

    Returns:
        (out, mask): out is (out_h, out_w, 3) uint8; mask is (out_h, out_w)
        uint8 with 1 on pixels whose source sample was in-domain. Out-of-
        domain pixels are black.

    Raises:
        ValueError: bad image shape/dtype, or optical axis outside the image.
    """
    if src.ndim != 3 or src.shape[2] != 3 or src.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 image, got "
                         f"{src.shape} {src.dtype}")
    src_h, src_w = src.shape[:2]
    qcx, qcy = params.qc
    if not (0.0 <= qcx <= src_w - 1.0 and 0.0 <= qcy <= src_h - 1.0):
        raise ValueError(f"optical axis {params.qc} outside source "
                         f"{src_w}x{src_h}")
    return kernels.fisheye_warp(np.ascontiguousarray(src), float(params.f),
                                float(qcx), float(qcy),
                                int(params.out_w), int(params.out_h))


def output_center(params: FisheyeParams):
    """Optical-axis position on the output canvas (pixel-grid coordinates)."""
    return (0.5 * (params.out_w - 1), 0.5 * (params.out_h - 1))


def map_segment_vertices(segment, params: FisheyeParams) -> np.ndarray:
    """Remap segment vertices from source coordinates to output grid points.

    Each vertex goes through the analytic inverse projection and is rounded
    to the nearest output grid point, which realizes the nearest-source-
    grid-point rule up to grid quantization. Vertices falling outside the
    output canvas are dropped.

    Args:
        segment: (N, 2) vertices in source-image pixels.
        params: warp parameters.

    Returns:
        (M, 2) float64 array of output pixel coordinates, M ≤ N; empty when
        every vertex left the canvas (callers drop the instance).
    """
    pts = np.asarray(segment, dtype=np.float64)
    ocx, ocy = output_center(params)
    out = []
    for x, y in pts:
        ex, ey = fisheye_inverse_map((x, y), params)
        gx = math.floor(ex + ocx + 0.5)
        gy = math.floor(ey + ocy + 0.5)
        if 0 <= gx <= params.out_w - 1 and 0 <= gy <= params.out_h - 1:
            out.append((float(gx), float(gy)))
    if not out:
        return np.empty((0, 2), dtype=np.float64)
    return np.array(out, dtype=np.float64)


def _snap_trig(angle: float):
    """cos/sin with exact values at multiples of pi/2."""
    k = angle / _HALF_PI
    kr = round(k)
    if abs(k - kr) < 1e-12:
        table = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))
        return table[int(kr) % 4]
    return (math.cos(angle), math.sin(angle))


def rotate_image(image: np.ndarray, angle: float) -> np.ndarray:
    """Rotate an (H, W, 3) uint8 image about its center, same canvas size.

    Bilinear sampling, black outside the source; exact right angles use
    snapped trigonometry so quarter turns permute pixels without blur.
    """
    if angle == 0.0:
        return image.copy()
    h, w = image.shape[:2]
    c, s = _snap_trig(angle)
    ccx = 0.5 * (w - 1)
    ccy = 0.5 * (h - 1)
    xs = np.arange(w, dtype=np.float64) - ccx
    ys = np.arange(h, dtype=np.float64) - ccy
    dx, dy = np.meshgrid(xs, ys)
    # inverse map: rotate output coords by -angle
    sx = c * dx + s * dy + ccx
    sy = -s * dx + c * dy + ccy
    valid = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    return _bilinear_sample(image, sx, sy, valid)


def _bilinear_sample(src, sx, sy, valid):
    """Shared bilinear resampler: floor(v+0.5) rounding, invalid pixels black."""
    src_h, src_w = src.shape[:2]
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = np.clip(x0.astype(np.int64), 0, src_w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, src_h - 1)
    x1i = np.clip(x0i + 1, 0, src_w - 1)
    y1i = np.clip(y0i + 1, 0, src_h - 1)
    x0i[~valid] = 0
    y0i[~valid] = 0
    x1i[~valid] = 0
    y1i[~valid] = 0
    out = np.zeros(valid.shape + (3,), dtype=np.uint8)
    srcf = src.astype(np.float64)
    for ch in range(3):
        p00 = srcf[y0i, x0i, ch]
        p01 = srcf[y0i, x1i, ch]
        p10 = srcf[y1i, x0i, ch]
        p11 = srcf[y1i, x1i, ch]
        v = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) + fy * ((1.0 - fx) * p10 + fx * p11)
        v = np.floor(v + 0.5)
        v = np.clip(v, 0.0, 255.0)
        chan = v.astype(np.uint8)
        chan[~valid] = 0
        out[:, :, ch] = chan
    return out


def rotate_image_and_annotations(record: ImageRecord, image: np.ndarray,
                                 angle: float):
    """Rotate an image and its segment annotations together.

    Vertices rotate by exactly the forward transform used (inversely) for
    pixels, so annotations stay aligned. Upright boxes are invalidated by
    rotation and dropped from the instances. angle = 0 is an exact identity.

    Returns:
        (rotated image, new ImageRecord).
    """
    if image.shape[0] != record.height or image.shape[1] != record.width:
        raise ValueError(f"image {record.image_id}: buffer {image.shape[1]}x"
                         f"{image.shape[0]} does not match record "
                         f"{record.width}x{record.height}")
    if angle == 0.0:
        return image.copy(), record
    out = rotate_image(image, angle)
    c, s = _snap_trig(angle)
    ccx = 0.5 * (record.width - 1)
    ccy = 0.5 * (record.height - 1)
    instances = []
    for inst in record.instances:
        segs = []
        for seg in inst.segments:
            p = np.asarray(seg, dtype=np.float64)
            dx = p[:, 0] - ccx
            dy = p[:, 1] - ccy
            q = np.empty_like(p)
            q[:, 0] = ccx + c * dx - s * dy
            q[:, 1] = ccy + s * dx + c * dy
            segs.append(q)
        instances.append(InstanceAnnotation(
            image_id=inst.image_id, category=inst.category,
            segments=tuple(segs), upright_box=None, iscrowd=inst.iscrowd,
            rle=inst.rle))
    return out, replace(record, instances=tuple(instances))


def apply_fisheye_to_record(record: ImageRecord,
                            params: FisheyeParams) -> ImageRecord:
    """Remap a record's segments onto the fisheye output canvas.

    Segments whose vertices all leave the canvas are dropped; instances left
    with no segments become excluded (no polygons). The record takes the
    output canvas dimensions.
    """
    instances = []
    for inst in record.instances:
        segs = []
        for seg in inst.segments:
            mapped = map_segment_vertices(seg, params)
            if mapped.shape[0] >= 3:
                segs.append(mapped)
        instances.append(InstanceAnnotation(
            image_id=inst.image_id, category=inst.category,
            segments=tuple(segs), upright_box=None, iscrowd=inst.iscrowd,
            rle=inst.rle))
    return ImageRecord(image_id=record.image_id, file=record.file,
                       width=params.out_w, height=params.out_h,
                       instances=tuple(instances))


def sample_params(config: AugmentConfig, src_w: int, src_h: int,
                  state: int):
    """Draw FisheyeParams for one application of the augmentation.

    Deterministic in (config.seed, state): the state is a draw counter, and
    each draw opens generator ((seed, stream, state)) consuming exactly one
    uniform triple in the order f, qc_x, qc_y.

    Returns:
        (params, next_state).
    """
    rng = np.random.default_rng((config.seed, _STREAM_FISHEYE, state))
    u = rng.uniform(size=3)
    half_diag = 0.5 * math.hypot(src_w, src_h)
    lo, hi = config.f_range
    f = (lo + (hi - lo) * u[0]) * half_diag
    qcx = 0.5 * (src_w - 1) + (2.0 * u[1] - 1.0) * config.qc_jitter * src_w
    qcy = 0.5 * (src_h - 1) + (2.0 * u[2] - 1.0) * config.qc_jitter * src_h
    # keep the axis on the image even under aggressive jitter
    qcx = min(max(qcx, 0.0), float(src_w - 1))
    qcy = min(max(qcy, 0.0), float(src_h - 1))
    side = config.out_size if config.out_size else min(src_w, src_h)
    params = FisheyeParams(f=f, qc=(qcx, qcy), out_w=side, out_h=side)
    return params, state + 1


def sample_geometry(config: AugmentConfig, state: int):
    """Draw (rotation angle, apply_fisheye coin) for one image.

    Same counter-based scheme as sample_params on an independent stream;
    draw order: angle, coin.

    Returns:
        (angle, apply_fisheye, next_state).
    """
    rng = np.random.default_rng((config.seed, _STREAM_GEOM, state))
    u = rng.uniform(size=2)
    lo, hi = config.rotation_range
    angle = lo + (hi - lo) * u[0]
    return angle, bool(u[1] < config.fisheye_probability), state + 1
