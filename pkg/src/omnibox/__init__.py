"""Rotated-box tooling for overhead fisheye pedestrian detection.

Subpackages cover the full pipeline: deriving rotated boxes from instance
segmentations, fisheye/rotation augmentation, Hungarian-matched training
losses, and rotated-box average-precision evaluation, plus a command-line
front end (`omnibox`).
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
