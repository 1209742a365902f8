"""Backend selection for the geometry kernels.

The compiled Cython backend is used when present; set RBOXKIT_PURE=1 (or
any non-empty value) to force the pure-Python fallback. Both backends
implement the same operations with the same arithmetic.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("RBOXKIT_PURE"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels


def backend_name() -> str:
    """Active kernel backend: "cython" or "python"."""
    return _impl.BACKEND


def clip_quads(a: np.ndarray, b: np.ndarray) -> list:
    """Intersection polygon of two convex CCW (4,2) corner arrays."""
    return _impl.clip_quads(a, b)


def intersect_area(a: np.ndarray, b: np.ndarray) -> float:
    return float(_impl.intersect_area(a, b))


def iou(a: np.ndarray, b: np.ndarray) -> float:
    return float(_impl.iou(a, b))


def iou_matrix(quads_a: np.ndarray, quads_b: np.ndarray) -> np.ndarray:
    """Pairwise rotated IoU between two stacks of CCW quads.

    Accepts (n, 4, 2) and (m, 4, 2) arrays, returns an (n, m) float64 array.
    """
    qa = np.ascontiguousarray(quads_a, dtype=np.float64)
    qb = np.ascontiguousarray(quads_b, dtype=np.float64)
    if qa.size == 0 or qb.size == 0:
        return np.zeros((qa.shape[0], qb.shape[0]))
    return np.asarray(_impl.iou_matrix(qa, qb), dtype=np.float64)
