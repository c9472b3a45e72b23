# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled geometry/warp kernels.

Function-for-function twin of `omnibox.kernels._pure`; keep the arithmetic
in the two files identical (same expressions, same reduction order) so both
backends produce matching results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, atan2, cos, floor, hypot, sin, tan
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double PI_2 = 1.5707963267948966  # == math.pi / 2.0 exactly in float64


cdef int _cmp_lex(const void* pa, const void* pb) noexcept nogil:
    cdef double ax = (<const double*> pa)[0]
    cdef double ay = (<const double*> pa)[1]
    cdef double bx = (<const double*> pb)[0]
    cdef double by = (<const double*> pb)[1]
    if ax < bx:
        return -1
    if ax > bx:
        return 1
    if ay < by:
        return -1
    if ay > by:
        return 1
    return 0


def convex_hull(cnp.ndarray[cnp.float64_t, ndim=2] points):
    """Monotone-chain convex hull; CCW, collinear points removed."""
    cdef Py_ssize_t n_in = points.shape[0]
    cdef double* buf = <double*> malloc(2 * n_in * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, n, k
    for i in range(n_in):
        buf[2 * i] = points[i, 0]
        buf[2 * i + 1] = points[i, 1]
    qsort(buf, n_in, 2 * sizeof(double), _cmp_lex)
    # dedupe adjacent equal points
    n = 0
    for i in range(n_in):
        if n == 0 or buf[2 * i] != buf[2 * (n - 1)] or buf[2 * i + 1] != buf[2 * (n - 1) + 1]:
            buf[2 * n] = buf[2 * i]
            buf[2 * n + 1] = buf[2 * i + 1]
            n += 1

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out
    if n <= 2:
        out = np.empty((n, 2), dtype=np.float64)
        for i in range(n):
            out[i, 0] = buf[2 * i]
            out[i, 1] = buf[2 * i + 1]
        free(buf)
        return out

    cdef double* hx = <double*> malloc(2 * n * sizeof(double))
    cdef double* hy = <double*> malloc(2 * n * sizeof(double))
    if hx == NULL or hy == NULL:
        free(buf)
        if hx != NULL:
            free(hx)
        if hy != NULL:
            free(hy)
        raise MemoryError()
    cdef Py_ssize_t m = 0
    cdef double ox, oy, ax, ay, qx, qy
    # lower chain
    for i in range(n):
        qx = buf[2 * i]
        qy = buf[2 * i + 1]
        while m >= 2:
            ox = hx[m - 2]
            oy = hy[m - 2]
            ax = hx[m - 1]
            ay = hy[m - 1]
            if (ax - ox) * (qy - oy) - (ay - oy) * (qx - ox) <= 0.0:
                m -= 1
            else:
                break
        hx[m] = qx
        hy[m] = qy
        m += 1
    cdef Py_ssize_t lower_len = m - 1  # drop last point, restart upper chain
    m = lower_len
    cdef Py_ssize_t start = m
    for i in range(n - 1, -1, -1):
        qx = buf[2 * i]
        qy = buf[2 * i + 1]
        while m >= start + 2:
            ox = hx[m - 2]
            oy = hy[m - 2]
            ax = hx[m - 1]
            ay = hy[m - 1]
            if (ax - ox) * (qy - oy) - (ay - oy) * (qx - ox) <= 0.0:
                m -= 1
            else:
                break
        hx[m] = qx
        hy[m] = qy
        m += 1
    k = m - 1  # last upper point repeats the first lower point
    out = np.empty((k, 2), dtype=np.float64)
    for i in range(k):
        out[i, 0] = hx[i]
        out[i, 1] = hy[i]
    free(buf)
    free(hx)
    free(hy)
    return out


def min_area_rect_raw(cnp.ndarray[cnp.float64_t, ndim=2] hull):
    """Rotating calipers; returns (cx, cy, along, perp, edge_angle)."""
    cdef Py_ssize_t n = hull.shape[0]
    cdef Py_ssize_t e, j
    cdef double ex, ey, length, ux, uy, d, nn
    cdef double dmin, dmax, nmin, nmax, area, key
    cdef double best_area = INFINITY
    cdef double best_key = INFINITY
    cdef double thresh
    cdef double best_ux = 1.0, best_uy = 0.0
    cdef double best_dmin = 0, best_dmax = 0, best_nmin = 0, best_nmax = 0
    cdef int p
    # pass 0: minimum candidate area; pass 1: among area ties (relative
    # 1e-9) keep the smallest half-perimeter, so that symmetric hulls
    # (acute triangles, squares) resolve the same way in every frame
    for p in range(2):
        thresh = best_area * (1.0 + 1e-9)
        for e in range(n):
            j = e + 1
            if j == n:
                j = 0
            ex = hull[j, 0] - hull[e, 0]
            ey = hull[j, 1] - hull[e, 1]
            length = hypot(ex, ey)
            ux = ex / length
            uy = ey / length
            dmin = dmax = ux * hull[0, 0] + uy * hull[0, 1]
            nmin = nmax = -uy * hull[0, 0] + ux * hull[0, 1]
            for j in range(1, n):
                d = ux * hull[j, 0] + uy * hull[j, 1]
                nn = -uy * hull[j, 0] + ux * hull[j, 1]
                if d < dmin:
                    dmin = d
                if d > dmax:
                    dmax = d
                if nn < nmin:
                    nmin = nn
                if nn > nmax:
                    nmax = nn
            area = (dmax - dmin) * (nmax - nmin)
            if p == 0:
                if area < best_area:
                    best_area = area
            elif area <= thresh:
                key = (dmax - dmin) + (nmax - nmin)
                if key < best_key:
                    best_key = key
                    best_ux = ux
                    best_uy = uy
                    best_dmin = dmin
                    best_dmax = dmax
                    best_nmin = nmin
                    best_nmax = nmax
    cdef double cd = 0.5 * (best_dmin + best_dmax)
    cdef double cn = 0.5 * (best_nmin + best_nmax)
    cdef double cx = cd * best_ux - cn * best_uy
    cdef double cy = cd * best_uy + cn * best_ux
    return (cx, cy, best_dmax - best_dmin, best_nmax - best_nmin,
            atan2(best_uy, best_ux))


cdef double _shoelace(double* xs, double* ys, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i, j
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * s


cdef double _clip_area(double* ax, double* ay, int na,
                       double* bx, double* by, int nb) noexcept nogil:
    """Intersection area of convex CCW polygons (<= 16 vertices each)."""
    cdef double cur_x[64]
    cdef double cur_y[64]
    cdef double new_x[64]
    cdef double new_y[64]
    cdef int m, e, i, j, nn
    cdef double px, py, qx, qy, dx, dy
    cdef double sx, sy, tx, ty, s_side, t_side, denom, t

    if _shoelace(ax, ay, na) <= 0.0 or _shoelace(bx, by, nb) <= 0.0:
        return 0.0
    m = na
    for i in range(na):
        cur_x[i] = ax[i]
        cur_y[i] = ay[i]
    for e in range(nb):
        if m == 0:
            return 0.0
        px = bx[e]
        py = by[e]
        j = e + 1
        if j == nb:
            j = 0
        qx = bx[j]
        qy = by[j]
        dx = qx - px
        dy = qy - py
        nn = 0
        for i in range(m):
            sx = cur_x[i]
            sy = cur_y[i]
            j = i + 1
            if j == m:
                j = 0
            tx = cur_x[j]
            ty = cur_y[j]
            s_side = dx * (sy - py) - dy * (sx - px)
            t_side = dx * (ty - py) - dy * (tx - px)
            if s_side >= 0.0:
                new_x[nn] = sx
                new_y[nn] = sy
                nn += 1
            if (s_side >= 0.0) != (t_side >= 0.0):
                denom = s_side - t_side
                if denom != 0.0:
                    t = s_side / denom
                    new_x[nn] = sx + t * (tx - sx)
                    new_y[nn] = sy + t * (ty - sy)
                    nn += 1
        m = nn
        for i in range(m):
            cur_x[i] = new_x[i]
            cur_y[i] = new_y[i]
    if m < 3:
        return 0.0
    cdef double area = _shoelace(cur_x, cur_y, m)
    return area if area > 0.0 else 0.0


def polygon_intersection_area(cnp.ndarray[cnp.float64_t, ndim=2] a,
                              cnp.ndarray[cnp.float64_t, ndim=2] b):
    """Area of the intersection of two convex CCW polygons."""
    cdef int na = <int> a.shape[0]
    cdef int nb = <int> b.shape[0]
    if na > 16 or nb > 16:
        raise ValueError("polygon_intersection_area supports at most 16 vertices")
    cdef double ax[16]
    cdef double ay[16]
    cdef double bx[16]
    cdef double by[16]
    cdef int i
    for i in range(na):
        ax[i] = a[i, 0]
        ay[i] = a[i, 1]
    for i in range(nb):
        bx[i] = b[i, 0]
        by[i] = b[i, 1]
    return _clip_area(ax, ay, na, bx, by, nb)


cdef void _box_corners_5(double cx, double cy, double w, double h,
                         double theta, double* out_x, double* out_y) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double hw = 0.5 * w
    cdef double hh = 0.5 * h
    cdef double lx[4]
    cdef double ly[4]
    lx[0] = -hw; lx[1] = hw; lx[2] = hw; lx[3] = -hw
    ly[0] = -hh; ly[1] = -hh; ly[2] = hh; ly[3] = hh
    cdef int i
    for i in range(4):
        out_x[i] = cx + c * lx[i] - s * ly[i]
        out_y[i] = cy + s * lx[i] + c * ly[i]


def rotated_iou_matrix(cnp.ndarray[cnp.float64_t, ndim=2] boxes_a,
                       cnp.ndarray[cnp.float64_t, ndim=2] boxes_b):
    """Pairwise IoU of rotated boxes given as (N, 5) arrays (cx,cy,w,h,theta)."""
    cdef Py_ssize_t na = boxes_a.shape[0]
    cdef Py_ssize_t nb = boxes_b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((na, nb), dtype=np.float64)
    cdef double* cax = <double*> malloc(4 * na * sizeof(double))
    cdef double* cay = <double*> malloc(4 * na * sizeof(double))
    cdef double* cbx = <double*> malloc(4 * nb * sizeof(double))
    cdef double* cby = <double*> malloc(4 * nb * sizeof(double))
    if cax == NULL or cay == NULL or cbx == NULL or cby == NULL:
        if cax != NULL: free(cax)
        if cay != NULL: free(cay)
        if cbx != NULL: free(cbx)
        if cby != NULL: free(cby)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef double inter, union_, v, area_a, area_b
    for i in range(na):
        _box_corners_5(boxes_a[i, 0], boxes_a[i, 1], boxes_a[i, 2],
                       boxes_a[i, 3], boxes_a[i, 4], cax + 4 * i, cay + 4 * i)
    for j in range(nb):
        _box_corners_5(boxes_b[j, 0], boxes_b[j, 1], boxes_b[j, 2],
                       boxes_b[j, 3], boxes_b[j, 4], cbx + 4 * j, cby + 4 * j)
    for i in range(na):
        area_a = boxes_a[i, 2] * boxes_a[i, 3]
        for j in range(nb):
            area_b = boxes_b[j, 2] * boxes_b[j, 3]
            inter = _clip_area(cax + 4 * i, cay + 4 * i, 4,
                               cbx + 4 * j, cby + 4 * j, 4)
            union_ = area_a + area_b - inter
            if union_ > 0.0:
                v = inter / union_
                out[i, j] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    free(cax)
    free(cay)
    free(cbx)
    free(cby)
    return out


def fisheye_warp(cnp.ndarray[cnp.uint8_t, ndim=3] src, double f,
                 double qcx, double qcy, int out_w, int out_h):
    """Equidistant-projection warp with bilinear sampling.

    Same contract as the pure backend: returns (out uint8 (out_h,out_w,3),
    mask uint8 (out_h,out_w)); out-of-domain pixels are black and masked.
    """
    cdef int src_h = <int> src.shape[0]
    cdef int src_w = <int> src.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] out = np.zeros((out_h, out_w, 3), dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] mask = np.zeros((out_h, out_w), dtype=np.uint8)
    cdef double ocx = 0.5 * (out_w - 1)
    cdef double ocy = 0.5 * (out_h - 1)
    cdef int xo, yo, ch
    cdef double dx, dy, r, theta, scale, sx, sy, fx, fy, v
    cdef double x0, y0
    cdef long x0i, y0i, x1i, y1i

    for yo in range(out_h):
        dy = yo - ocy
        for xo in range(out_w):
            dx = xo - ocx
            r = hypot(dx, dy)
            theta = r / f
            if theta >= PI_2:
                continue
            if r > 0.0:
                scale = f * tan(theta) / r
            else:
                scale = 1.0
            sx = dx * scale + qcx
            sy = dy * scale + qcy
            if sx < 0.0 or sx > src_w - 1.0 or sy < 0.0 or sy > src_h - 1.0:
                continue
            x0 = floor(sx)
            y0 = floor(sy)
            fx = sx - x0
            fy = sy - y0
            x0i = <long> x0
            y0i = <long> y0
            if x0i < 0:
                x0i = 0
            if x0i > src_w - 1:
                x0i = src_w - 1
            if y0i < 0:
                y0i = 0
            if y0i > src_h - 1:
                y0i = src_h - 1
            x1i = x0i + 1
            y1i = y0i + 1
            if x1i > src_w - 1:
                x1i = src_w - 1
            if y1i > src_h - 1:
                y1i = src_h - 1
            for ch in range(3):
                v = ((1.0 - fy) * ((1.0 - fx) * src[y0i, x0i, ch] + fx * src[y0i, x1i, ch])
                     + fy * ((1.0 - fx) * src[y1i, x0i, ch] + fx * src[y1i, x1i, ch]))
                v = floor(v + 0.5)
                if v < 0.0:
                    v = 0.0
                if v > 255.0:
                    v = 255.0
                out[yo, xo, ch] = <cnp.uint8_t> v
            mask[yo, xo] = 1
    return out, mask
