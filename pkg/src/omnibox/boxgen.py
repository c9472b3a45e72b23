"""Rotated-box generation from instance segmentations.

Pipeline per instance: pool every polygon vertex of the instance, take the
convex hull, fit the minimum-area rectangle, canonicalize. Multi-polygon
instances (occlusion splits) contribute all their vertices to one hull so
each pedestrian yields exactly one box.
"""

from dataclasses import dataclass, field

import numpy as np

from .annotations import RotatedImageEntry
from .geometry import (RotatedBox, box_corners, convex_intersection_area,
                       min_area_rect)

DEGENERATE_AREA_PX2 = 1.0
MIN_VISIBILITY = 0.25


@dataclass(frozen=True)
class GeneratedBox:
    """A generated box in pixel space plus its normalized twin.

    normalized divides cx and w by the image width, cy and h by the image
    height; the angle is shared and stays in pixel space (see the dataset
    file metadata for the convention note).
    """

    box: RotatedBox
    normalized: RotatedBox
    source_instance: object
    degenerate: bool


@dataclass
class GenReport:
    """Aggregate counts for generate_dataset."""

    images: int = 0
    instances: int = 0
    boxes: int = 0
    skipped_excluded: int = 0
    skipped_no_vertices: int = 0
    dropped_degenerate: int = 0
    dropped_low_visibility: int = 0
    errors: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "images": self.images,
            "instances": self.instances,
            "boxes": self.boxes,
            "skipped_excluded": self.skipped_excluded,
            "skipped_no_vertices": self.skipped_no_vertices,
            "dropped_degenerate": self.dropped_degenerate,
            "dropped_low_visibility": self.dropped_low_visibility,
            "errors": list(self.errors),
        }


def instance_vertices(instance) -> np.ndarray:
    """All segment vertices of an instance as one (N, 2) array."""
    if not instance.segments:
        return np.empty((0, 2), dtype=np.float64)
    return np.concatenate([np.asarray(s, dtype=np.float64)
                           for s in instance.segments], axis=0)


def generate_box(instance, image_w: int, image_h: int,
                 source_id=None) -> GeneratedBox:
    """Fit the minimum-area rotated box to one instance's segmentation.

    Args:
        instance: InstanceAnnotation (or any object with .segments).
        image_w, image_h: image size in pixels, used for normalization.
        source_id: identifier stored on the result (defaults to the
            instance's image_id).

    Returns:
        GeneratedBox; ``degenerate`` is set when the fitted area is below
        1 px² (collinear or near-empty segments).

    Raises:
        ValueError: the instance has no polygon vertices.
    """
    verts = instance_vertices(instance)
    if verts.shape[0] == 0:
        raise ValueError("instance has no polygon vertices")
    box = min_area_rect(verts)
    degenerate = box.degenerate or box.area < DEGENERATE_AREA_PX2
    normalized = RotatedBox(box.cx / image_w, box.cy / image_h,
                            box.w / image_w, box.h / image_h, box.theta,
                            degenerate=degenerate)
    if source_id is None:
        source_id = getattr(instance, "image_id", None)
    return GeneratedBox(box=box, normalized=normalized,
                        source_instance=source_id, degenerate=degenerate)


def visibility_ratio(box: RotatedBox, image_w: int, image_h: int) -> float:
    """Fraction of the box's corner-polygon area inside the image rectangle."""
    if box.area <= 0.0:
        return 0.0
    rect = np.array([(0.0, 0.0), (float(image_w), 0.0),
                     (float(image_w), float(image_h)), (0.0, float(image_h))])
    return convex_intersection_area(box_corners(box), rect) / box.area


def generate_dataset(records, min_visibility: float = MIN_VISIBILITY,
                     drop_degenerate: bool = True):
    """Generate rotated boxes for every usable instance of every record.

    Args:
        records: ImageRecords from annotations.load_coco.
        min_visibility: boxes with a smaller in-image area fraction are
            dropped (rotation augmentation can push boxes outside).
        drop_degenerate: drop boxes under 1 px².

    Returns:
        (entries, report): internal-json-ready RotatedImageEntry list sorted
        by image id (images with zero surviving boxes keep an empty entry)
        and a GenReport. Per-instance failures are collected, never raised.
    """
    report = GenReport()
    entries = []
    for rec in records:
        report.images += 1
        boxes = []
        for k, inst in enumerate(rec.instances):
            report.instances += 1
            if inst.excluded:
                report.skipped_excluded += 1
                continue
            try:
                gen = generate_box(inst, rec.width, rec.height,
                                   source_id=(rec.image_id, k))
            except ValueError:
                report.skipped_no_vertices += 1
                continue
            if drop_degenerate and gen.degenerate:
                report.dropped_degenerate += 1
                continue
            if visibility_ratio(gen.box, rec.width, rec.height) < min_visibility:
                report.dropped_low_visibility += 1
                continue
            boxes.append(gen.box)
        report.boxes += len(boxes)
        entries.append(RotatedImageEntry(image_id=rec.image_id, file=rec.file,
                                         width=rec.width, height=rec.height,
                                         boxes=tuple(boxes)))
    entries.sort(key=_entry_sort_key)
    return entries, report


def _entry_sort_key(entry):
    image_id = entry.image_id
    return (0, image_id, "") if isinstance(image_id, (int, float)) \
        else (1, 0, str(image_id))
