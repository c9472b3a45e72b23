"""Kernel backend selection.

The hot loops (convex hull, min-area rectangle, convex polygon clipping,
fisheye warp) exist twice: a Cython extension (`omnibox.kernels._core`)
and a pure numpy fallback (`omnibox.kernels._pure`). The compiled core is
preferred when importable; set OMNIBOX_KERNELS=pure or =compiled to force
a backend (forcing "compiled" raises if the extension is missing).

Both backends implement the same arithmetic; `benchmarks/bench_kernels.py`
compares their speed and the parity tests assert agreement.
"""

import os

from . import _pure

_requested = os.environ.get("OMNIBOX_KERNELS", "").strip().lower()

_compiled = None
if _requested != "pure":
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None
    if _requested == "compiled" and _compiled is None:
        raise ImportError(
            "OMNIBOX_KERNELS=compiled but the omnibox.kernels._core extension "
            "is not built; install with the C extension or unset the variable"
        )

_impl = _compiled if _compiled is not None else _pure

BACKEND = _impl.BACKEND_NAME

convex_hull = _impl.convex_hull
min_area_rect_raw = _impl.min_area_rect_raw
polygon_intersection_area = _impl.polygon_intersection_area
rotated_iou_matrix = _impl.rotated_iou_matrix
fisheye_warp = _impl.fisheye_warp


def available_backends():
    """Importable backend modules keyed by name ('pure', 'compiled')."""
    found = {"pure": _pure}
    if _compiled is not None:
        found["compiled"] = _compiled
    return found
