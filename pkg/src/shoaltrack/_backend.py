"""Select the kernel implementation at import time.

The compiled extension is used when importable; ``SHOALTRACK_PURE_PYTHON=1``
forces the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SHOALTRACK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

iou_matrix = _impl.iou_matrix
lap_square = _impl.lap_square

__all__ = ["BACKEND", "iou_matrix", "lap_square"]
