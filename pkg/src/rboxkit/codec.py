"""Corner-offset regression codec between anchors and quadrilaterals.

Offsets are dimensionless: x offsets are normalized by the anchor width,
y offsets by the anchor height, per corner. A regression target is a
(4, 2) array with row i = (t_xi, t_yi).
"""

import numpy as np

from .errors import ValidationError
from .geom import Quad, RRect, rrect_to_quad


def cyclic_align(corners: np.ndarray, reference: np.ndarray) -> int:
    """Cyclic shift k minimizing total squared distance to reference corners.

    corners[(i + k) % 4] is matched against reference[i]. Returns k; ties
    resolve to the smallest shift. Use shift_corners to apply it.
    """
    c = np.asarray(corners, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    best_k = 0
    best_cost = np.inf
    for k in range(4):
        d = c[(np.arange(4) + k) % 4] - r
        cost = float(np.sum(d * d))
        if cost < best_cost:
            best_cost = cost
            best_k = k
    return best_k


def shift_corners(corners: np.ndarray, k: int) -> np.ndarray:
    """Rotate corner indexing forward by k (corner k becomes corner 0)."""
    idx = (np.arange(4) + k) % 4
    return np.asarray(corners, dtype=np.float64)[idx]


def encode_obb(anchor: RRect, target: Quad, align_corners: bool = False) -> np.ndarray:
    """Normalized corner offsets of a target quad relative to an anchor.

    t_xi = (x_i - x_i_anchor) / w_anchor and t_yi likewise with the height.
    With align_corners=True the target's corner indexing is first cyclically
    rotated to minimize displacement (anchors carry no meaningful front, so
    regression targets built for them should not depend on which ground-truth
    corner was annotated first); the default encodes corners as given.
    """
    if anchor.w <= 0.0 or anchor.h <= 0.0:
        raise ValidationError("anchor must have positive width and height")
    anchor_c = rrect_to_quad(anchor).corners
    c = target.corners
    if align_corners:
        c = shift_corners(c, cyclic_align(c, anchor_c))
    t = np.empty((4, 2))
    t[:, 0] = (c[:, 0] - anchor_c[:, 0]) / anchor.w
    t[:, 1] = (c[:, 1] - anchor_c[:, 1]) / anchor.h
    return t


def decode_obb(anchor: RRect, t: np.ndarray) -> np.ndarray:
    """Invert encode_obb: absolute corners from offsets, as a (4, 2) array.

    Returns raw corners, not a Quad: regressed outputs need not be convex,
    so the caller validates (Quad(...)) or refines via min_area_rect.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (4, 2):
        raise ValidationError(f"expected (4, 2) offsets, got shape {t.shape}")
    anchor_c = rrect_to_quad(anchor).corners
    c = np.empty((4, 2))
    c[:, 0] = t[:, 0] * anchor.w + anchor_c[:, 0]
    c[:, 1] = t[:, 1] * anchor.h + anchor_c[:, 1]
    return c
