"""Rotated-box geometry: quads, rotated rectangles, IoU, enclosing rectangles.

Conventions used throughout the package:

* coordinates are pixels, plain floats; "counter-clockwise" means positive
  shoelace area in the (x, y) frame as given
* quads are convex simple quadrilaterals; corner 0 marks the object front
  and is preserved by canonicalization
* rotated-rectangle angles are degrees, measured counter-clockwise from the
  +x axis to the width edge, stored in [0, 180) (front/back agnostic)
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateGeometryError, ValidationError

# convexity test tolerance on the corner cross products
EPS_CONVEX = 1e-9
# side lengths below this are treated as coincident corners
EPS_SIDE = 1e-9


def _as_corners(points) -> np.ndarray:
    c = np.asarray(points, dtype=np.float64)
    if c.shape != (4, 2):
        raise ValidationError(f"expected 4 (x, y) corners, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("corner coordinates must be finite")
    return c


def _shoelace(c: np.ndarray) -> float:
    x, y = c[:, 0], c[:, 1]
    return 0.5 * float(
        np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    )


@dataclass(frozen=True)
class Quad:
    """Convex quadrilateral as a (4, 2) float64 corner array, CCW.

    Input corners may be clockwise; canonicalization reverses them while
    keeping corner 0 first. Non-convex or degenerate inputs are rejected.
    """

    corners: np.ndarray

    def __init__(self, corners):
        c = _as_corners(corners).copy()
        if _shoelace(c) < 0.0:
            c = c[[0, 3, 2, 1]]
        area = _shoelace(c)
        if area <= 0.0:
            raise DegenerateGeometryError("quad has zero area")
        d1 = np.roll(c, -1, axis=0) - c
        d2 = np.roll(d1, -1, axis=0)
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(cross < -EPS_CONVEX):
            raise ValidationError(
                "quad is not convex (or self-intersecting); corner cross "
                f"products {cross.tolist()}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_flat(cls, values) -> "Quad":
        """Build from a flat [x1, y1, x2, y2, x3, y3, x4, y4] sequence."""
        v = np.asarray(values, dtype=np.float64).reshape(4, 2)
        return cls(v)

    def flat(self) -> np.ndarray:
        return self.corners.reshape(-1).copy()

    def __eq__(self, other):
        return isinstance(other, Quad) and np.array_equal(
            self.corners, other.corners
        )

    __hash__ = None  # holds an array; identity hashing would mislead


@dataclass(frozen=True)
class RRect:
    """Rotated rectangle: center, width, height, angle in degrees [0, 180)."""

    cx: float
    cy: float
    w: float
    h: float
    angle: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "angle"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"RRect.{name} must be finite")
            object.__setattr__(self, name, v)
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValidationError("RRect width and height must be positive")
        object.__setattr__(self, "angle", self.angle % 180.0)


@dataclass(frozen=True)
class AABB:
    """Axis-aligned box: upper-left corner, width, height."""

    xmin: float
    ymin: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("xmin", "ymin", "w", "h"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"AABB.{name} must be finite")
            object.__setattr__(self, name, v)
        if self.w < 0.0 or self.h < 0.0:
            raise ValidationError("AABB width and height must be >= 0")

    @property
    def xmax(self) -> float:
        return self.xmin + self.w

    @property
    def ymax(self) -> float:
        return self.ymin + self.h

    @property
    def area(self) -> float:
        return self.w * self.h


def quad_area(q: Quad) -> float:
    """Shoelace area of a quad, strictly positive."""
    return _shoelace(q.corners)


def convex_intersect(a: Quad, b: Quad) -> np.ndarray:
    """Vertices of a ∩ b, CCW, as a (k, 2) array; empty (0, 2) when the
    interiors are disjoint (contact along an edge or corner counts as
    disjoint). k is at most 8."""
    pts = kernels.clip_quads(a.corners, b.corners)
    if not pts:
        return np.zeros((0, 2))
    return np.asarray(pts, dtype=np.float64)


def rotated_iou(a: Quad, b: Quad) -> float:
    """Intersection-over-union of two convex quads; symmetric, in [0, 1]."""
    return kernels.iou(a.corners, b.corners)


def hbb_iou(a: AABB, b: AABB) -> float:
    """Standard axis-aligned IoU; 0.0 when both boxes have zero area."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def interior_angles(q: Quad) -> np.ndarray:
    """Interior angle at each corner, in degrees, via the cosine rule.

    For corner i with neighbours i-1 and i+1 the angle is
    arccos((p² + n² - d²) / (2 p n)) where p, n are the adjacent side
    lengths and d the diagonal between the neighbours. Sums to 360 for
    every valid quad. Raises on coincident adjacent corners.
    """
    c = q.corners
    prev = np.roll(c, 1, axis=0) - c
    nxt = np.roll(c, -1, axis=0) - c
    # squared lengths kept exact (no hypot round trip) so right angles of
    # axis-aligned rectangles come out as cos = 0 exactly
    p2 = prev[:, 0] ** 2 + prev[:, 1] ** 2
    n2 = nxt[:, 0] ** 2 + nxt[:, 1] ** 2
    if np.any(p2 <= EPS_SIDE * EPS_SIDE) or np.any(n2 <= EPS_SIDE * EPS_SIDE):
        raise DegenerateGeometryError("coincident adjacent corners")
    diag = np.roll(c, -1, axis=0) - np.roll(c, 1, axis=0)
    d2 = diag[:, 0] ** 2 + diag[:, 1] ** 2
    cosv = (p2 + n2 - d2) / (2.0 * np.sqrt(p2 * n2))
    cosv = np.clip(cosv, -1.0, 1.0)
    return np.degrees(np.arccos(cosv))


def min_area_rect(q: Quad) -> RRect:
    """Minimum-area enclosing rotated rectangle of a quad.

    Rotating-calipers on the (convex) corners: one rectangle edge is
    collinear with a quad edge, so only the four edge directions are
    candidates. Near-ties resolve to the lowest edge index, which makes
    rrect_to_quad -> min_area_rect a round trip.
    """
    c = q.corners
    best = None  # (area, edge_index, w, h, cx, cy, angle)
    for i in range(4):
        e = c[(i + 1) % 4] - c[i]
        ln = float(np.hypot(e[0], e[1]))
        if ln <= EPS_SIDE:
            continue
        u = e / ln
        v = np.array([-u[1], u[0]])
        s = c @ u
        t = c @ v
        smin, smax = float(s.min()), float(s.max())
        tmin, tmax = float(t.min()), float(t.max())
        w = smax - smin
        h = tmax - tmin
        area = w * h
        if best is None or area < best[0] * (1.0 - 1e-9):
            angle = float(np.degrees(np.arctan2(u[1], u[0]))) % 180.0
            center = 0.5 * (smin + smax) * u + 0.5 * (tmin + tmax) * v
            best = (area, i, w, h, float(center[0]), float(center[1]), angle)
    if best is None:
        raise DegenerateGeometryError("quad has no usable edges")
    _, _, w, h, cx, cy, angle = best
    return RRect(cx, cy, w, h, angle)


def axis_align(q: Quad) -> tuple:
    """Rotate a quad so its minimum enclosing rectangle is axis-aligned.

    Rotates about the enclosing rectangle's center by -angle and returns
    (AABB of the rotated quad, rotation applied in degrees).
    """
    r = min_area_rect(q)
    rot = -r.angle
    rad = np.radians(rot)
    cosr, sinr = np.cos(rad), np.sin(rad)
    rel = q.corners - np.array([r.cx, r.cy])
    rx = rel[:, 0] * cosr - rel[:, 1] * sinr + r.cx
    ry = rel[:, 0] * sinr + rel[:, 1] * cosr + r.cy
    xmin, ymin = float(rx.min()), float(ry.min())
    return AABB(xmin, ymin, float(rx.max()) - xmin, float(ry.max()) - ymin), rot


def rrect_to_quad(r: RRect) -> Quad:
    """Materialize a rotated rectangle as a CCW quad.

    Corner 0 is the rotated image of the local (-w/2, -h/2) corner, so the
    corner 0 -> corner 1 edge runs along the width at the stored angle.
    """
    rad = np.radians(r.angle)
    cosr, sinr = np.cos(rad), np.sin(rad)
    hw, hh = 0.5 * r.w, 0.5 * r.h
    local = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
    x = local[:, 0] * cosr - local[:, 1] * sinr + r.cx
    y = local[:, 0] * sinr + local[:, 1] * cosr + r.cy
    return Quad(np.stack([x, y], axis=1))


def quad_to_aabb(q: Quad) -> AABB:
    """Axis-aligned bounding box of a quad's corners."""
    c = q.corners
    xmin, ymin = float(c[:, 0].min()), float(c[:, 1].min())
    return AABB(xmin, ymin, float(c[:, 0].max()) - xmin,
                float(c[:, 1].max()) - ymin)


def aabb_to_quad(b: AABB) -> Quad:
    """Materialize an axis-aligned box as a CCW quad (zero-area rejected)."""
    return Quad([
        [b.xmin, b.ymin],
        [b.xmax, b.ymin],
        [b.xmax, b.ymax],
        [b.xmin, b.ymax],
    ])
