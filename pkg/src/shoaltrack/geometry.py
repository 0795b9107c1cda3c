"""Box similarity and distance primitives."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from . import _backend
from .mot_io import BBox


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two closed rectangles; touching edges give 0."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    if iw <= 0.0:
        return 0.0
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    # Areas from the same derived extents, so iou(a, a) is exactly 1.
    area_a = (a.right - a.left) * (a.bottom - a.top)
    area_b = (b.right - b.left) * (b.bottom - b.top)
    return inter / (area_a + area_b - inter)


def center_distance(a: BBox, b: BBox) -> float:
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


def boxes_to_array(boxes: Iterable[BBox]) -> np.ndarray:
    arr = np.array([b.as_ltwh() for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def iou_matrix(a: Iterable[BBox] | np.ndarray, b: Iterable[BBox] | np.ndarray) -> np.ndarray:
    """Pairwise IoU, rows from ``a`` and columns from ``b``.

    Accepts box sequences or ``(n, 4)`` ltwh arrays; dispatches to the
    compiled kernel when available.
    """
    arr_a = a if isinstance(a, np.ndarray) else boxes_to_array(a)
    arr_b = b if isinstance(b, np.ndarray) else boxes_to_array(b)
    arr_a = np.ascontiguousarray(arr_a, dtype=np.float64).reshape(-1, 4)
    arr_b = np.ascontiguousarray(arr_b, dtype=np.float64).reshape(-1, 4)
    return _backend.iou_matrix(arr_a, arr_b)


def iou_distance(a, b) -> np.ndarray:
    """``1 - IoU`` for every pair."""
    return 1.0 - iou_matrix(a, b)
