"""Computational-geometry primitives for rotated pedestrian boxes.

Polygons are (N, 2) float64 arrays of x, y vertices. Rotated boxes are
center/size/angle records in a canonical form: the angle lies in
[-pi/2, pi/2) and the box height is never smaller than its width, so the
"height" axis is the one closest to the subject's body axis.

The heavy kernels (hull, calipers, clipping) live in `omnibox.kernels`
and are backed by either a compiled extension or pure numpy; this module
adds validation, canonicalization and the dataclass layer on top.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class RotatedBox:
    """Rotated rectangle in pixel coordinates.

    Corners are center + R(theta) @ (+-w/2, +-h/2), counter-clockwise.
    Canonical boxes satisfy h >= w and -pi/2 <= theta < pi/2; construction
    only enforces finiteness and non-negative sizes so intermediate
    (pre-canonicalization) values can be represented.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite RotatedBox field: {vals}")
        if self.w < 0.0 or self.h < 0.0:
            raise ValueError(f"negative box size: w={self.w} h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def is_canonical(self) -> bool:
        return self.h >= self.w and -_HALF_PI <= self.theta < _HALF_PI

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h, self.theta],
                        dtype=np.float64)


@dataclass(frozen=True)
class AxisBox:
    """Axis-aligned box normalized by image size; all fields in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite AxisBox field: {vals}")
        if self.w < 0.0 or self.h < 0.0:
            raise ValueError(f"negative box size: w={self.w} h={self.h}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"AxisBox center outside [0,1]: ({self.cx}, {self.cy})")

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


def as_polygon(points) -> np.ndarray:
    """Validate and convert vertex data to an (N, 2) float64 array.

    Args:
        points: array-like of shape (N, 2), N >= 1.

    Returns:
        A float64 copy of the vertices.

    Raises:
        ValueError: on empty input, wrong shape, or non-finite coordinates.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
        raise ValueError(f"polygon must have shape (N>=1, 2), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("polygon contains non-finite coordinates")
    return np.ascontiguousarray(arr)


def convex_hull(points) -> np.ndarray:
    """Convex hull of a point set.

    Args:
        points: array-like of shape (N, 2).

    Returns:
        Hull vertices, counter-clockwise, starting at the lexicographically
        smallest point, collinear points removed. Degenerate inputs give a
        1- or 2-point result.
    """
    return kernels.convex_hull(as_polygon(points))


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi/2, pi/2)."""
    t = (theta + _HALF_PI) % math.pi - _HALF_PI
    # float modulo can land exactly on the open upper bound
    if t >= _HALF_PI:
        t -= math.pi
    return t


def canonicalize(cx: float, cy: float, w: float, h: float,
                 theta: float) -> RotatedBox:
    """Return the canonical RotatedBox for an arbitrary parameterization.

    Swaps width/height (rotating theta by pi/2) when needed so h >= w, then
    wraps theta into [-pi/2, pi/2). The corner point set is unchanged.
    """
    if w > h:
        w, h = h, w
        theta = theta + _HALF_PI
    return RotatedBox(cx, cy, w, h, wrap_angle(theta))


def min_area_rect(points) -> RotatedBox:
    """Minimum-area enclosing rectangle of a point set.

    Args:
        points: array-like of shape (N, 2); typically a convex hull, but any
            point set works (the hull is established internally).

    Returns:
        Canonical RotatedBox. One rectangle edge is collinear with a hull
        edge. Collinear or single-point inputs give a zero-width box along
        the segment direction with ``degenerate=True``. For squares the
        angle closest to zero is chosen.

    Raises:
        ValueError: empty input or non-finite coordinates.
    """
    hull = kernels.convex_hull(as_polygon(points))
    n = hull.shape[0]
    if n == 1:
        return RotatedBox(hull[0, 0], hull[0, 1], 0.0, 0.0, 0.0,
                          degenerate=True)
    if n == 2:
        (x0, y0), (x1, y1) = hull
        length = math.hypot(x1 - x0, y1 - y0)
        phi = math.atan2(y1 - y0, x1 - x0)
        # height axis (theta + pi/2) must point along the segment
        box = canonicalize(0.5 * (x0 + x1), 0.5 * (y0 + y1),
                           0.0, length, phi - _HALF_PI)
        return RotatedBox(box.cx, box.cy, box.w, box.h, box.theta,
                          degenerate=True)
    cx, cy, along, perp, phi = kernels.min_area_rect_raw(hull)
    if abs(along - perp) <= 1e-12 * max(along, perp, 1.0):
        # square: both edge alignments are minimal; pick theta nearest 0,
        # breaking the +-pi/4 tie toward the negative angle
        cands = [wrap_angle(phi), wrap_angle(phi + _HALF_PI)]
        theta = min(cands, key=lambda t: (abs(t), t))
        return RotatedBox(cx, cy, along, perp, theta)
    return canonicalize(cx, cy, along, perp, phi)


def box_corners(box: RotatedBox) -> np.ndarray:
    """Corner polygon of a rotated box, counter-clockwise (4, 2) array."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    hw = 0.5 * box.w
    hh = 0.5 * box.h
    local = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)],
                     dtype=np.float64)
    rot = np.array([(c, -s), (s, c)], dtype=np.float64)
    return local @ rot.T + np.array([box.cx, box.cy])


def convex_polygon_area(poly) -> float:
    """Unsigned area of a convex polygon (shoelace)."""
    p = as_polygon(poly)
    x = p[:, 0]
    y = p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def convex_intersection_area(a, b) -> float:
    """Intersection area of two convex counter-clockwise polygons."""
    return kernels.polygon_intersection_area(as_polygon(a), as_polygon(b))


def rotated_iou(a: RotatedBox, b: RotatedBox) -> float:
    """Intersection-over-union of two rotated boxes (0 when union is empty)."""
    arr_a = a.as_array().reshape(1, 5)
    arr_b = b.as_array().reshape(1, 5)
    return float(kernels.rotated_iou_matrix(arr_a, arr_b)[0, 0])


def rotated_iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU matrix for two collections of rotated boxes.

    Args:
        boxes_a: sequence of RotatedBox or (N, 5) array of cx, cy, w, h, theta.
        boxes_b: sequence of RotatedBox or (M, 5) array.

    Returns:
        (N, M) float64 array with entries in [0, 1].
    """
    return kernels.rotated_iou_matrix(_boxes_to_array(boxes_a),
                                      _boxes_to_array(boxes_b))


def _boxes_to_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        arr = np.ascontiguousarray(boxes, dtype=np.float64)
    else:
        boxes = list(boxes)
        arr = np.empty((len(boxes), 5), dtype=np.float64)
        for i, b in enumerate(boxes):
            arr[i] = b.as_array() if isinstance(b, RotatedBox) else np.asarray(b, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 5:
        raise ValueError(f"expected (N, 5) box array, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("box array contains non-finite values")
    return arr


def axis_iou(a: AxisBox, b: AxisBox) -> float:
    """IoU of two axis-aligned boxes (0 when union is empty)."""
    inter = _axis_intersection(a, b)
    union = a.area + b.area - inter
    return inter / union if union > 0.0 else 0.0


def _axis_intersection(a: AxisBox, b: AxisBox) -> float:
    iw = min(a.cx + 0.5 * a.w, b.cx + 0.5 * b.w) - max(a.cx - 0.5 * a.w, b.cx - 0.5 * b.w)
    ih = min(a.cy + 0.5 * a.h, b.cy + 0.5 * b.h) - max(a.cy - 0.5 * a.h, b.cy - 0.5 * b.h)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def giou(a: AxisBox, b: AxisBox) -> float:
    """Generalized IoU of two axis-aligned boxes.

    IoU minus the fraction of the smallest enclosing box not covered by the
    union; lies in (-1, 1]. Two coincident zero-area boxes give 0.
    """
    inter = _axis_intersection(a, b)
    union = a.area + b.area - inter
    ew = max(a.cx + 0.5 * a.w, b.cx + 0.5 * b.w) - min(a.cx - 0.5 * a.w, b.cx - 0.5 * b.w)
    eh = max(a.cy + 0.5 * a.h, b.cy + 0.5 * b.h) - min(a.cy - 0.5 * a.h, b.cy - 0.5 * b.h)
    enclose = ew * eh
    iou = inter / union if union > 0.0 else 0.0
    if enclose <= 0.0:
        return iou
    return iou - (enclose - union) / enclose


def rotate_points(points, angle: float, center) -> np.ndarray:
    """Rotate points counter-clockwise by `angle` radians about `center`."""
    p = as_polygon(points)
    c = math.cos(angle)
    s = math.sin(angle)
    cx, cy = float(center[0]), float(center[1])
    out = np.empty_like(p)
    dx = p[:, 0] - cx
    dy = p[:, 1] - cy
    out[:, 0] = cx + c * dx - s * dy
    out[:, 1] = cy + s * dx + c * dy
    return out


def rotate_box(box: RotatedBox, angle: float, center) -> RotatedBox:
    """Rotate a box counter-clockwise about `center`, keeping canonical form."""
    c = math.cos(angle)
    s = math.sin(angle)
    cx, cy = float(center[0]), float(center[1])
    dx = box.cx - cx
    dy = box.cy - cy
    return canonicalize(cx + c * dx - s * dy, cy + s * dx + c * dy,
                        box.w, box.h, box.theta + angle)
