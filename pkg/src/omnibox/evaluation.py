"""Rotated-box detection metrics.

Average precision over rotated-polygon IoU with greedy matching and
101-point (or all-point) precision-recall integration, COCO-style threshold
averaging 0.50:0.05:0.95, area strata, and position-stratified AP50 under a
rotation protocol: the whole scene (boxes and detections together) is
rotated at fixed intervals about each image center, AP50 is computed per
position bin for every interval, and bins report mean ± standard error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import RotatedBox, rotate_box, rotated_iou_matrix

IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
AREA_SMALL_MAX = 64.0 * 64.0   # strata boundaries on rotated-box area
AREA_MEDIUM_MAX = 96.0 * 96.0


@dataclass(frozen=True)
class Detection:
    """One scored rotated-box detection."""

    image_id: object
    box: RotatedBox
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite detection score: {self.score}")


@dataclass(frozen=True)
class APReport:
    """Metric bundle; absent strata/bins are None."""

    ap: float | None
    ap50: float | None
    ap75: float | None
    ap_small: float | None
    ap_medium: float | None
    ap_large: float | None
    distance_bins: tuple | None = None
    angle_bins: tuple | None = None

    def as_dict(self) -> dict:
        out = {
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "ap_small": self.ap_small,
            "ap_medium": self.ap_medium,
            "ap_large": self.ap_large,
        }
        if self.distance_bins is not None:
            out["distance_bins"] = [dict(b) for b in self.distance_bins]
        if self.angle_bins is not None:
            out["angle_bins"] = [dict(b) for b in self.angle_bins]
        return out


def detections_from_entries(entries):
    """Flatten scored RotatedImageEntry records into Detection objects."""
    dets = []
    for e in entries:
        if e.scores is None:
            raise ValueError(f"image {e.image_id}: prediction entries "
                             "require scores")
        for box, score in zip(e.boxes, e.scores):
            dets.append(Detection(e.image_id, box, float(score)))
    return dets


class _Matcher:
    """Precomputed per-image IoU tables shared across thresholds and masks."""

    def __init__(self, dets, gts):
        self.dets = list(dets)
        # global rank: score descending, stable on input order
        self.order = sorted(range(len(self.dets)),
                            key=lambda i: (-self.dets[i].score, i))
        self.gt_keys = []       # (image_id, local index) per global gt id
        self.gt_boxes = []
        gt_index = {}           # image_id -> [global gt ids]
        for rec in gts:
            ids = []
            for j, box in enumerate(rec.boxes):
                ids.append(len(self.gt_keys))
                self.gt_keys.append((rec.image_id, j))
                self.gt_boxes.append(box)
            gt_index[rec.image_id] = ids
        # per-detection candidate gt ids + IoU row
        det_by_image = {}
        for i, d in enumerate(self.dets):
            det_by_image.setdefault(d.image_id, []).append(i)
        self.det_gt_ids = [np.empty(0, dtype=np.int64)] * len(self.dets)
        self.det_ious = [np.empty(0)] * len(self.dets)
        for image_id, det_ids in det_by_image.items():
            gt_ids = gt_index.get(image_id, [])
            if not gt_ids:
                continue
            iou = rotated_iou_matrix([self.dets[i].box for i in det_ids],
                                     [self.gt_boxes[g] for g in gt_ids])
            gt_arr = np.asarray(gt_ids, dtype=np.int64)
            for row, i in enumerate(det_ids):
                self.det_gt_ids[i] = gt_arr
                self.det_ious[i] = iou[row]
        self._match_cache = {}

    @property
    def n_gt(self) -> int:
        return len(self.gt_boxes)

    def match(self, threshold: float):
        """Greedy assignment at one IoU threshold.

        Returns matched_gt[rank] = global gt id (or -1) for the detection at
        each global rank. A detection takes the unmatched ground truth with
        the highest IoU ≥ threshold; IoU ties go to the lower ground-truth
        index within the image.
        """
        if threshold in self._match_cache:
            return self._match_cache[threshold]
        taken = np.zeros(self.n_gt, dtype=bool)
        matched = np.full(len(self.order), -1, dtype=np.int64)
        for rank, i in enumerate(self.order):
            gt_ids = self.det_gt_ids[i]
            if gt_ids.size == 0:
                continue
            ious = self.det_ious[i]
            ok = (ious >= threshold) & ~taken[gt_ids]
            if not ok.any():
                continue
            cand = np.where(ok)[0]
            best = cand[np.argmax(ious[cand])]  # first max → lowest gt index
            matched[rank] = gt_ids[best]
            taken[gt_ids[best]] = True
        self._match_cache[threshold] = matched
        return matched

    def ap(self, threshold: float, interpolation: str = "101",
           gt_mask=None):
        """AP at one threshold; gt_mask restricts the ground-truth set.

        Detections matched to a masked-out ground truth are ignored (neither
        TP nor FP); unmatched detections count as false positives. Returns
        None when the (masked) ground-truth set is empty.
        """
        if gt_mask is None:
            n_gt = self.n_gt
        else:
            n_gt = int(np.count_nonzero(gt_mask))
        if n_gt == 0:
            return None
        matched = self.match(threshold)
        tp = []
        for g in matched:
            if g < 0:
                tp.append(False)
            elif gt_mask is None or gt_mask[g]:
                tp.append(True)
            else:
                continue  # matched an out-of-stratum ground truth: ignore
        return _ap_from_tp(np.asarray(tp, dtype=bool), n_gt, interpolation)


def _ap_from_tp(tp: np.ndarray, n_gt: int, interpolation: str) -> float:
    """Integrate a precision-recall curve from ranked TP flags."""
    if tp.size == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    ranks = np.arange(1, tp.size + 1)
    precision = tp_cum / ranks
    recall = tp_cum / n_gt
    # precision envelope: best precision at any recall >= r
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    if interpolation == "101":
        grid = np.linspace(0.0, 1.0, 101)
        idx = np.searchsorted(recall, grid, side="left")
        vals = np.where(idx < recall.size, envelope[np.minimum(idx, recall.size - 1)], 0.0)
        return float(vals.mean())
    if interpolation == "all":
        # area under the enveloped step curve
        prev_r = 0.0
        area = 0.0
        for k in range(tp.size):
            if tp[k]:
                area += (recall[k] - prev_r) * envelope[k]
                prev_r = recall[k]
        return float(area)
    raise ValueError(f"unknown interpolation mode: {interpolation!r}")


def ap_at_iou(dets, gts, iou_threshold: float,
              interpolation: str = "101"):
    """Average precision of rotated-box detections at one IoU threshold.

    Args:
        dets: Detection list (any order; ranked internally by score).
        gts: records with .image_id and .boxes (ground-truth rotated boxes).
        iou_threshold: rotated-IoU match threshold.
        interpolation: "101" (101-point) or "all" (all-point area).

    Returns:
        AP in [0, 1], or None when there are no ground-truth boxes.
    """
    return _Matcher(dets, gts).ap(iou_threshold, interpolation)


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    if not vals or len(vals) != len(values):
        return None
    return float(np.mean(vals))


def coco_ap(dets, gts, interpolation: str = "101") -> APReport:
    """Threshold-averaged AP plus AP50/AP75 and area strata.

    Strata split ground truths by rotated-box area: small < 64², medium in
    [64², 96²], large > 96². Detections matched to a ground truth outside
    the stratum under evaluation are ignored rather than counted as false
    positives.
    """
    matcher = _Matcher(dets, gts)
    per_threshold = [matcher.ap(t, interpolation) for t in IOU_THRESHOLDS]
    areas = np.array([b.area for b in matcher.gt_boxes], dtype=np.float64)
    masks = {
        "small": areas < AREA_SMALL_MAX,
        "medium": (areas >= AREA_SMALL_MAX) & (areas <= AREA_MEDIUM_MAX),
        "large": areas > AREA_MEDIUM_MAX,
    }
    strata = {}
    for name, mask in masks.items():
        strata[name] = _mean_or_none(
            [matcher.ap(t, interpolation, gt_mask=mask)
             for t in IOU_THRESHOLDS])
    return APReport(
        ap=_mean_or_none(per_threshold),
        ap50=matcher.ap(0.5, interpolation),
        ap75=matcher.ap(0.75, interpolation),
        ap_small=strata["small"],
        ap_medium=strata["medium"],
        ap_large=strata["large"],
    )


def _rotate_scene(dets, gts, image_sizes, angle: float):
    """Rotate detections and ground truths together about image centers."""
    if angle == 0.0:
        return dets, gts
    centers = {img: (0.5 * w, 0.5 * h) for img, (w, h) in image_sizes.items()}
    new_dets = [Detection(d.image_id, rotate_box(d.box, angle,
                                                 centers[d.image_id]),
                          d.score) for d in dets]
    new_gts = []
    for rec in gts:
        c = centers[rec.image_id]
        new_gts.append(_GTView(rec.image_id,
                               tuple(rotate_box(b, angle, c)
                                     for b in rec.boxes)))
    return new_dets, new_gts


@dataclass(frozen=True)
class _GTView:
    image_id: object
    boxes: tuple


def _bin_assignments(matcher, image_sizes, n_distance_bins, angle_bin_deg):
    """Distance and polar-angle bin index per ground truth."""
    dist = np.empty(matcher.n_gt, dtype=np.int64)
    ang = np.empty(matcher.n_gt, dtype=np.int64)
    n_angle_bins = int(math.ceil(360.0 / angle_bin_deg))
    for g, (image_id, _) in enumerate(matcher.gt_keys):
        w, h = image_sizes[image_id]
        cx, cy = 0.5 * w, 0.5 * h
        box = matcher.gt_boxes[g]
        dx = box.cx - cx
        dy = box.cy - cy
        r_norm = math.hypot(dx, dy) / (0.5 * math.hypot(w, h))
        dist[g] = min(int(r_norm * n_distance_bins), n_distance_bins - 1)
        phi = math.degrees(math.atan2(dy, dx)) % 360.0
        ang[g] = int(phi / angle_bin_deg) % n_angle_bins
    return dist, ang, n_angle_bins


def stratified_ap50(dets, gts, image_sizes, n_distance_bins: int = 5,
                    angle_bin_deg: float = 45.0,
                    rotate_interval_deg: float = 5.0,
                    interpolation: str = "101"):
    """Position-binned AP50 under the rotation protocol.

    For every rotation angle 0, interval, 2·interval, … < 360°, detections
    and ground truths are rotated together about their image centers, ground
    truths are binned by normalized center distance (0 at the center, 1 at
    the corner radius) and polar angle, and AP50 is computed per bin with
    out-of-bin ground truths ignored. Bins aggregate the per-interval APs.

    Args:
        dets: Detection list.
        gts: ground-truth records.
        image_sizes: mapping image_id -> (width, height) in pixels.
        n_distance_bins: number of equal-width radial bins.
        angle_bin_deg: polar-angle bin width in degrees.
        rotate_interval_deg: rotation protocol step; 0 disables rotation.

    Returns:
        (distance_bins, angle_bins): tuples of per-bin dicts with keys
        bin, lo, hi, mean_ap50, stderr, intervals. Bins with no ground
        truth in any interval report mean_ap50 = None.
    """
    if rotate_interval_deg <= 0.0:
        angles = [0.0]
    else:
        steps = int(round(360.0 / rotate_interval_deg))
        angles = [math.radians(k * rotate_interval_deg) for k in range(steps)]
    n_angle_bins = int(math.ceil(360.0 / angle_bin_deg))
    dist_vals = [[] for _ in range(n_distance_bins)]
    ang_vals = [[] for _ in range(n_angle_bins)]
    for a in angles:
        r_dets, r_gts = _rotate_scene(dets, gts, image_sizes, a)
        matcher = _Matcher(r_dets, r_gts)
        dist_bin, ang_bin, _ = _bin_assignments(matcher, image_sizes,
                                                n_distance_bins,
                                                angle_bin_deg)
        for b in range(n_distance_bins):
            v = matcher.ap(0.5, interpolation, gt_mask=(dist_bin == b))
            if v is not None:
                dist_vals[b].append(v)
        for b in range(n_angle_bins):
            v = matcher.ap(0.5, interpolation, gt_mask=(ang_bin == b))
            if v is not None:
                ang_vals[b].append(v)

    def _table(values, lo_hi):
        rows = []
        for b, vals in enumerate(values):
            lo, hi = lo_hi(b)
            if vals:
                mean = float(np.mean(vals))
                stderr = (float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                          if len(vals) > 1 else 0.0)
            else:
                mean = None
                stderr = None
            rows.append({"bin": b, "lo": lo, "hi": hi, "mean_ap50": mean,
                         "stderr": stderr, "intervals": len(vals)})
        return tuple(rows)

    dist_table = _table(dist_vals,
                        lambda b: (b / n_distance_bins, (b + 1) / n_distance_bins))
    ang_table = _table(ang_vals,
                       lambda b: (b * angle_bin_deg,
                                  min((b + 1) * angle_bin_deg, 360.0)))
    return dist_table, ang_table
