"""Pure numpy implementations of the hot geometry/warp kernels.

This module mirrors the compiled `_core` extension function for function.
Both backends share the exact same arithmetic (same expressions, same
reduction order on small arrays) so that results agree bit-for-bit in
practice; the parity test suite enforces agreement.

All functions assume validated inputs: float64 C-contiguous arrays, convex
polygons in counter-clockwise order where stated. Input validation lives in
the public wrappers (`omnibox.geometry`, `omnibox.augment`).
"""

import math

import numpy as np

BACKEND_NAME = "pure"


def convex_hull(points):
    """Convex hull of (N, 2) points via monotone chain.

    Returns the hull in counter-clockwise order starting at the
    lexicographically smallest vertex, with collinear points removed.
    Degenerate inputs yield a 2-point segment or a single point.
    """
    order = np.lexsort((points[:, 1], points[:, 0]))
    p = points[order]
    if len(p) > 1:
        keep = np.empty(len(p), dtype=bool)
        keep[0] = True
        keep[1:] = (np.diff(p[:, 0]) != 0.0) | (np.diff(p[:, 1]) != 0.0)
        p = p[keep]
    n = len(p)
    if n <= 2:
        return p.copy()

    def chain(pts):
        out = []
        for q in pts:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (q[1] - oy) - (ay - oy) * (q[0] - ox) <= 0.0:
                    out.pop()
                else:
                    break
            out.append((q[0], q[1]))
        return out

    lower = chain(p)
    upper = chain(p[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.array(hull, dtype=np.float64)


def min_area_rect_raw(hull):
    """Rotating-calipers minimum-area rectangle over a convex CCW hull.

    Returns (cx, cy, extent_along_edge, extent_perpendicular, edge_angle)
    in the raw edge-aligned frame; callers canonicalize. Requires >= 3
    vertices (degenerate hulls are handled by the caller).
    """
    x = np.ascontiguousarray(hull[:, 0])
    y = np.ascontiguousarray(hull[:, 1])
    ex = np.roll(x, -1) - x
    ey = np.roll(y, -1) - y
    length = np.hypot(ex, ey)
    ux = ex / length
    uy = ey / length
    # projections of every vertex onto each edge direction / left normal
    d = ux[:, None] * x[None, :] + uy[:, None] * y[None, :]
    n = -uy[:, None] * x[None, :] + ux[:, None] * y[None, :]
    dmin = d.min(axis=1)
    dmax = d.max(axis=1)
    nmin = n.min(axis=1)
    nmax = n.max(axis=1)
    areas = (dmax - dmin) * (nmax - nmin)
    # symmetric hulls (acute triangles, squares) tie several edges on
    # area; break ties by half-perimeter so the pick does not depend on
    # the frame the points were presented in
    thresh = areas.min() * (1.0 + 1e-9)
    cand = np.flatnonzero(areas <= thresh)
    k = int(cand[np.argmin((dmax - dmin)[cand] + (nmax - nmin)[cand])])
    cd = 0.5 * (dmin[k] + dmax[k])
    cn = 0.5 * (nmin[k] + nmax[k])
    cx = cd * ux[k] - cn * uy[k]
    cy = cd * uy[k] + cn * ux[k]
    return (cx, cy, dmax[k] - dmin[k], nmax[k] - nmin[k],
            math.atan2(uy[k], ux[k]))


def _shoelace(xs, ys, n):
    s = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * s


def polygon_intersection_area(a, b):
    """Area of the intersection of two convex CCW polygons.

    Sutherland-Hodgman clipping followed by the shoelace formula. Returns
    0.0 if either operand has non-positive signed area (degenerate input).
    """
    ax = a[:, 0].tolist()
    ay = a[:, 1].tolist()
    bx = b[:, 0].tolist()
    by = b[:, 1].tolist()
    if _shoelace(ax, ay, len(ax)) <= 0.0 or _shoelace(bx, by, len(bx)) <= 0.0:
        return 0.0

    cur_x = ax
    cur_y = ay
    nb = len(bx)
    for e in range(nb):
        if not cur_x:
            return 0.0
        px = bx[e]
        py = by[e]
        qx = bx[(e + 1) % nb]
        qy = by[(e + 1) % nb]
        dx = qx - px
        dy = qy - py
        new_x = []
        new_y = []
        m = len(cur_x)
        for i in range(m):
            sx = cur_x[i]
            sy = cur_y[i]
            tx = cur_x[(i + 1) % m]
            ty = cur_y[(i + 1) % m]
            s_side = dx * (sy - py) - dy * (sx - px)
            t_side = dx * (ty - py) - dy * (tx - px)
            if s_side >= 0.0:
                new_x.append(sx)
                new_y.append(sy)
            if (s_side >= 0.0) != (t_side >= 0.0):
                denom = s_side - t_side
                if denom != 0.0:
                    t = s_side / denom
                    new_x.append(sx + t * (tx - sx))
                    new_y.append(sy + t * (ty - sy))
        cur_x = new_x
        cur_y = new_y
    if len(cur_x) < 3:
        return 0.0
    area = _shoelace(cur_x, cur_y, len(cur_x))
    return area if area > 0.0 else 0.0


def _box_corners_5(cx, cy, w, h, theta, out_x, out_y):
    c = math.cos(theta)
    s = math.sin(theta)
    hw = 0.5 * w
    hh = 0.5 * h
    # CCW: (-hw,-hh), (hw,-hh), (hw,hh), (-hw,hh) rotated then translated
    lx = (-hw, hw, hw, -hw)
    ly = (-hh, -hh, hh, hh)
    for i in range(4):
        out_x[i] = cx + c * lx[i] - s * ly[i]
        out_y[i] = cy + s * lx[i] + c * ly[i]


def rotated_iou_matrix(boxes_a, boxes_b):
    """Pairwise IoU of rotated boxes given as (N, 5) arrays (cx,cy,w,h,theta)."""
    na = boxes_a.shape[0]
    nb = boxes_b.shape[0]
    out = np.zeros((na, nb), dtype=np.float64)
    corners_a = np.empty((na, 4, 2), dtype=np.float64)
    corners_b = np.empty((nb, 4, 2), dtype=np.float64)
    tmp_x = [0.0] * 4
    tmp_y = [0.0] * 4
    for i in range(na):
        _box_corners_5(*boxes_a[i], tmp_x, tmp_y)
        corners_a[i, :, 0] = tmp_x
        corners_a[i, :, 1] = tmp_y
    for j in range(nb):
        _box_corners_5(*boxes_b[j], tmp_x, tmp_y)
        corners_b[j, :, 0] = tmp_x
        corners_b[j, :, 1] = tmp_y
    area_a = boxes_a[:, 2] * boxes_a[:, 3]
    area_b = boxes_b[:, 2] * boxes_b[:, 3]
    for i in range(na):
        for j in range(nb):
            inter = polygon_intersection_area(corners_a[i], corners_b[j])
            union = area_a[i] + area_b[j] - inter
            if union > 0.0:
                v = inter / union
                out[i, j] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


def fisheye_warp(src, f, qcx, qcy, out_w, out_h):
    """Equidistant-projection warp of an (H, W, 3) uint8 image.

    Every output pixel, taken relative to the output-image optical axis
    (the canvas center), is mapped back into the source through
    r_src = f * tan(r_out / f) and sampled bilinearly. Pixels whose ray
    leaves the hemisphere (r_out / f >= pi/2) or whose source point falls
    outside the image are black and masked invalid.

    Returns (out_image uint8 (out_h, out_w, 3), mask uint8 (out_h, out_w)).
    """
    src_h, src_w = src.shape[0], src.shape[1]
    ocx = 0.5 * (out_w - 1)
    ocy = 0.5 * (out_h - 1)
    xs = np.arange(out_w, dtype=np.float64) - ocx
    ys = np.arange(out_h, dtype=np.float64) - ocy
    dx, dy = np.meshgrid(xs, ys)
    r = np.hypot(dx, dy)
    theta = r / f
    valid = theta < math.pi / 2.0
    with np.errstate(invalid="ignore", over="ignore"):
        scale = np.where(r > 0.0, f * np.tan(np.where(valid, theta, 0.0)) / np.where(r > 0.0, r, 1.0), 1.0)
    sx = dx * scale + qcx
    sy = dy * scale + qcy
    valid &= (sx >= 0.0) & (sx <= src_w - 1.0) & (sy >= 0.0) & (sy <= src_h - 1.0)

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

    out = np.zeros((out_h, out_w, 3), dtype=np.uint8)
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
    return out, valid.astype(np.uint8)
