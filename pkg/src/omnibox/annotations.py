"""Annotation ingestion and persistence.

Three on-disk formats:

* COCO instance-annotation JSON (``images``/``annotations``/``categories``
  arrays, polygon segmentations) — read-only input for box generation.
* internal-json — this package's rotated-box dataset format::

      { "meta": {...},
        "images": [ { "id", "file", "width", "height",
                      "boxes": [ {"cx","cy","w","h","angle_deg","score"?} ] } ] }

  Sizes and centers are in pixels, angles in degrees on disk (radians in
  memory), numbers rounded to 6 decimals on write. "score" appears only in
  prediction files.
* cepdof-json — ``{ image_name: [[cx, cy, w, h, degrees], ...] }``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RotatedBox, canonicalize

ROUND_DECIMALS = 6


class FormatError(ValueError):
    """Unparseable annotation input.

    Attributes:
        byte_offset: position of the first offending byte in the file, or
            None when the failure is structural rather than syntactic.
    """

    def __init__(self, message, byte_offset=None):
        super().__init__(message)
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class InstanceAnnotation:
    """One object instance from a COCO-style annotation file.

    segments hold pixel-space polygons as (N, 2) float64 arrays, clamped to
    the image rectangle. Crowd (iscrowd=1) and RLE-masked instances keep no
    polygons and are excluded from box generation.
    """

    image_id: object
    category: object
    segments: tuple
    upright_box: tuple | None  # COCO (x, y, w, h) in pixels
    iscrowd: bool
    rle: bool = False

    @property
    def excluded(self) -> bool:
        """True when box generation must skip this instance."""
        return self.iscrowd or self.rle or len(self.segments) == 0


@dataclass(frozen=True)
class ImageRecord:
    image_id: object
    file: str
    width: int
    height: int
    instances: tuple

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"image {self.image_id}: non-positive size {self.width}x{self.height}")


@dataclass(frozen=True)
class RotatedGT:
    """Ground-truth rotated boxes of one image (all canonical)."""

    image_id: object
    boxes: tuple


@dataclass(frozen=True)
class RotatedImageEntry:
    """One internal-json image record; scores is None for GT files."""

    image_id: object
    file: str
    width: int
    height: int
    boxes: tuple
    scores: tuple | None = None


@dataclass
class LoadReport:
    """Ingestion summary for load_coco."""

    images_total: int = 0
    images_kept: int = 0
    instances: int = 0
    crowd_excluded: int = 0
    rle_excluded: int = 0
    empty_segment_instances: int = 0
    clamped_vertices: int = 0
    errors: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "images_total": self.images_total,
            "images_kept": self.images_kept,
            "instances": self.instances,
            "crowd_excluded": self.crowd_excluded,
            "rle_excluded": self.rle_excluded,
            "empty_segment_instances": self.empty_segment_instances,
            "clamped_vertices": self.clamped_vertices,
            "errors": list(self.errors),
        }


def _read_json(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not valid UTF-8 at byte {e.start}",
                          byte_offset=e.start) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise FormatError(f"{path}: invalid JSON at byte {offset}: {e.msg}",
                          byte_offset=offset) from e


def _parse_segments(segmentation, width, height, report):
    """Decode a COCO segmentation field into clamped (N, 2) arrays.

    Returns (segments, is_rle). Flat coordinate lists shorter than 3 points
    or of odd length are dropped with a report entry.
    """
    if isinstance(segmentation, dict):
        return (), True  # RLE mask: excluded from polygon processing
    segments = []
    for flat in segmentation or ():
        if not isinstance(flat, (list, tuple)) or len(flat) % 2 != 0:
            report.errors.append("segment with odd coordinate count dropped")
            continue
        if len(flat) < 6:
            report.errors.append("segment with fewer than 3 vertices dropped")
            continue
        arr = np.asarray(flat, dtype=np.float64).reshape(-1, 2)
        if not np.isfinite(arr).all():
            report.errors.append("segment with non-finite coordinates dropped")
            continue
        clamped = np.empty_like(arr)
        np.clip(arr[:, 0], 0.0, float(width), out=clamped[:, 0])
        np.clip(arr[:, 1], 0.0, float(height), out=clamped[:, 1])
        report.clamped_vertices += int(np.count_nonzero(
            (clamped[:, 0] != arr[:, 0]) | (clamped[:, 1] != arr[:, 1])))
        segments.append(clamped)
    return tuple(segments), False


def load_coco(annotation_file, category_filter="person"):
    """Load a COCO annotation file, keeping one category.

    Args:
        annotation_file: path to the JSON file.
        category_filter: category name or numeric category id.

    Returns:
        (records, report): records are ImageRecords for every image with at
        least one instance of the category, sorted by image id; report
        collects counts and per-record errors.

    Raises:
        FormatError: unparseable JSON or missing top-level structure.
    """
    data = _read_json(annotation_file)
    if not isinstance(data, dict) or "images" not in data or "annotations" not in data:
        raise FormatError(
            f"{annotation_file}: expected top-level 'images' and 'annotations' arrays")

    if isinstance(category_filter, str):
        cat_ids = {c["id"] for c in data.get("categories", ())
                   if c.get("name") == category_filter}
        if not cat_ids:
            raise FormatError(
                f"{annotation_file}: category {category_filter!r} not found")
    else:
        cat_ids = {category_filter}

    report = LoadReport()
    images = {}
    for img in data["images"]:
        report.images_total += 1
        img_id = img.get("id")
        width = img.get("width")
        height = img.get("height")
        if not isinstance(width, int) or not isinstance(height, int) \
                or width <= 0 or height <= 0:
            report.errors.append(f"image {img_id}: missing or invalid dimensions")
            continue
        images[img_id] = (img.get("file_name", ""), width, height)

    by_image = {}
    for ann in data["annotations"]:
        if ann.get("category_id") not in cat_ids:
            continue
        img_id = ann.get("image_id")
        if img_id not in images:
            report.errors.append(
                f"annotation {ann.get('id')}: unknown image {img_id}")
            continue
        _, width, height = images[img_id]
        report.instances += 1
        iscrowd = bool(ann.get("iscrowd", 0))
        segments, rle = _parse_segments(ann.get("segmentation"), width, height,
                                        report)
        if iscrowd:
            report.crowd_excluded += 1
        if rle:
            report.rle_excluded += 1
        if not iscrowd and not rle and not segments:
            report.empty_segment_instances += 1
        bbox = ann.get("bbox")
        upright = tuple(float(v) for v in bbox) if bbox and len(bbox) == 4 else None
        inst = InstanceAnnotation(image_id=img_id, category=ann.get("category_id"),
                                  segments=segments, upright_box=upright,
                                  iscrowd=iscrowd, rle=rle)
        by_image.setdefault(img_id, []).append(inst)

    records = []
    for img_id in sorted(by_image, key=_id_sort_key):
        file, width, height = images[img_id]
        records.append(ImageRecord(image_id=img_id, file=file, width=width,
                                   height=height,
                                   instances=tuple(by_image[img_id])))
    report.images_kept = len(records)
    return records, report


def _id_sort_key(image_id):
    # numeric ids sort numerically, everything else lexically
    return (0, image_id, "") if isinstance(image_id, (int, float)) \
        else (1, 0, str(image_id))


def load_internal(path):
    """Read an internal-json file into RotatedImageEntry records.

    Boxes are canonicalized (degrees → radians, wrap, h ≥ w). Entries keep
    file order. Score fields, when present on every box of an image, are
    returned in the entry's ``scores``.
    """
    data = _read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("images"), list):
        raise FormatError(f"{path}: expected top-level 'images' array")
    entries = []
    for rec in data["images"]:
        try:
            boxes = []
            scores = []
            has_score = False
            for b in rec.get("boxes", ()):
                boxes.append(canonicalize(float(b["cx"]), float(b["cy"]),
                                          float(b["w"]), float(b["h"]),
                                          math.radians(float(b["angle_deg"]))))
                if "score" in b:
                    has_score = True
                    scores.append(float(b["score"]))
                else:
                    scores.append(None)
            if has_score and any(s is None for s in scores):
                raise FormatError(
                    f"{path}: image {rec.get('id')}: mixed scored/unscored boxes")
            entries.append(RotatedImageEntry(
                image_id=rec["id"], file=rec.get("file", ""),
                width=int(rec["width"]), height=int(rec["height"]),
                boxes=tuple(boxes),
                scores=tuple(scores) if has_score else None))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, FormatError):
                raise
            raise FormatError(f"{path}: malformed image record "
                              f"{rec.get('id')!r}: {e}") from e
    return entries


def load_rotated_gt(path, format_id):
    """Load rotated ground-truth boxes.

    Args:
        path: annotation file.
        format_id: "internal-json" or "cepdof-json".

    Returns:
        List of RotatedGT with canonical boxes (angles in radians).

    Raises:
        FormatError: unknown format or unparseable content.
    """
    if format_id == "internal-json":
        return [RotatedGT(e.image_id, e.boxes) for e in load_internal(path)]
    if format_id == "cepdof-json":
        data = _read_json(path)
        if not isinstance(data, dict):
            raise FormatError(f"{path}: expected an object keyed by image name")
        out = []
        for name in data:
            rows = data[name]
            boxes = []
            for row in rows:
                if len(row) != 5:
                    raise FormatError(
                        f"{path}: image {name!r}: expected [cx,cy,w,h,deg] rows")
                cx, cy, w, h, deg = (float(v) for v in row)
                boxes.append(canonicalize(cx, cy, w, h, math.radians(deg)))
            out.append(RotatedGT(name, tuple(boxes)))
        return out
    raise FormatError(f"unknown rotated-GT format: {format_id!r}")


def _round(value):
    v = round(float(value), ROUND_DECIMALS)
    return 0.0 if v == 0.0 else v  # avoid "-0.0" in output


def save_rotated_dataset(entries, path):
    """Write RotatedImageEntry records as internal-json.

    Field order and float formatting are fixed so identical inputs produce
    byte-identical files. Angles are stored in degrees.

    Raises:
        OSError: I/O failure (message includes path via the OS error).
    """
    images = []
    for e in entries:
        boxes = []
        for i, b in enumerate(e.boxes):
            row = {
                "cx": _round(b.cx),
                "cy": _round(b.cy),
                "w": _round(b.w),
                "h": _round(b.h),
                "angle_deg": _round(math.degrees(b.theta)),
            }
            if e.scores is not None:
                row["score"] = _round(e.scores[i])
            boxes.append(row)
        images.append({
            "id": e.image_id,
            "file": e.file,
            "width": e.width,
            "height": e.height,
            "boxes": boxes,
        })
    doc = {
        "meta": {
            "angle_unit": "degrees",
            "box_space": "pixels",
            "normalization": "cx,w by image width; cy,h by image height; "
                             "angle kept in pixel space",
        },
        "images": images,
    }
    text = json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")
