"""Pure-Python geometry kernels: convex clipping, overlap area, rotated IoU.

This is the fallback backend; `rboxkit._ckernels` implements the same
functions in Cython with an identical operation order, so the two backends
agree to the last bit on IEEE-754 hardware. Keep any change here mirrored
in the .pyx file.

Quads are passed as sequences of 4 (x, y) corner pairs in counter-clockwise
order. Validation happens upstream (rboxkit.geom); kernels assume convexity.
"""

import math

BACKEND = "python"

# point-on-edge classification tolerance, applied to the signed distance
# (cross product normalized by edge length)
EPS_EDGE = 1e-9
# output vertices closer than this are merged
EPS_MERGE = 1e-9
# intersections below this fraction of the smaller area count as contact,
# not overlap (shared edges and corners must not suppress in NMS)
EPS_CONTACT = 1e-12


def poly_area(xs, ys):
    """Signed shoelace area of a polygon (positive for CCW order)."""
    n = len(xs)
    acc = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        acc += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * acc


def _clip_coords(ax, ay, bx, by):
    """Sutherland-Hodgman clip of convex CCW polygon a by convex CCW quad b.

    Returns (xs, ys) of the clipped polygon, unmerged.
    """
    out_x = list(ax)
    out_y = list(ay)
    for e in range(4):
        if not out_x:
            break
        px = bx[e]
        py = by[e]
        f = e + 1
        if f == 4:
            f = 0
        qx = bx[f]
        qy = by[f]
        ex = qx - px
        ey = qy - py
        tol = -EPS_EDGE * math.sqrt(ex * ex + ey * ey)

        in_x = out_x
        in_y = out_y
        out_x = []
        out_y = []
        sx = in_x[-1]
        sy = in_y[-1]
        s_in = ex * (sy - py) - ey * (sx - px) >= tol
        for i in range(len(in_x)):
            vx = in_x[i]
            vy = in_y[i]
            v_in = ex * (vy - py) - ey * (vx - px) >= tol
            if v_in != s_in:
                # segment (s, v) crosses the clip line: intersect them
                dcx = px - qx
                dcy = py - qy
                dpx = sx - vx
                dpy = sy - vy
                n1 = px * qy - py * qx
                n2 = sx * vy - sy * vx
                den = dcx * dpy - dcy * dpx
                out_x.append((n1 * dpx - n2 * dcx) / den)
                out_y.append((n1 * dpy - n2 * dcy) / den)
            if v_in:
                out_x.append(vx)
                out_y.append(vy)
            sx = vx
            sy = vy
            s_in = v_in
    return out_x, out_y


def _merge_close(xs, ys):
    """Drop consecutive vertices closer than EPS_MERGE (cyclically)."""
    mx = []
    my = []
    lim = EPS_MERGE * EPS_MERGE
    for i in range(len(xs)):
        if mx:
            dx = xs[i] - mx[-1]
            dy = ys[i] - my[-1]
            if dx * dx + dy * dy < lim:
                continue
        mx.append(xs[i])
        my.append(ys[i])
    while len(mx) > 1:
        dx = mx[0] - mx[-1]
        dy = my[0] - my[-1]
        if dx * dx + dy * dy < lim:
            mx.pop()
            my.pop()
        else:
            break
    return mx, my


def clip_quads(a, b):
    """Intersection polygon of convex CCW quads, close vertices merged.

    Returns a list of (x, y) tuples, CCW, possibly empty. Degenerate
    (zero-area) overlaps are reported as empty.
    """
    ax = [float(p[0]) for p in a]
    ay = [float(p[1]) for p in a]
    bx = [float(p[0]) for p in b]
    by = [float(p[1]) for p in b]
    xs, ys = _clip_coords(ax, ay, bx, by)
    if len(xs) < 3:
        return []
    area = poly_area(xs, ys)
    floor = EPS_CONTACT * min(abs(poly_area(ax, ay)), abs(poly_area(bx, by)))
    if area <= floor:
        return []
    xs, ys = _merge_close(xs, ys)
    if len(xs) < 3:
        return []
    return list(zip(xs, ys))


def intersect_area(a, b):
    """Overlap area of two convex CCW quads (0.0 for contact-only).

    Symmetric in its arguments (canonical operand order, as in iou).
    """
    ax = [float(p[0]) for p in a]
    ay = [float(p[1]) for p in a]
    bx = [float(p[0]) for p in b]
    by = [float(p[1]) for p in b]
    if _quad_less(ax, ay, bx, by):
        ax, ay, bx, by = bx, by, ax, ay
    xs, ys = _clip_coords(ax, ay, bx, by)
    if len(xs) < 3:
        return 0.0
    area = poly_area(xs, ys)
    floor = EPS_CONTACT * min(abs(poly_area(ax, ay)), abs(poly_area(bx, by)))
    if area <= floor:
        return 0.0
    return area


def _quad_less(ax, ay, bx, by):
    """Lexicographic corner order, used to canonicalize operand order."""
    for i in range(4):
        if bx[i] < ax[i]:
            return True
        if bx[i] > ax[i]:
            return False
        if by[i] < ay[i]:
            return True
        if by[i] > ay[i]:
            return False
    return False


def iou(a, b):
    """Rotated IoU of two convex CCW quads, in [0, 1].

    Operands are swapped into canonical order first so the result is
    exactly symmetric in its arguments.
    """
    ax = [float(p[0]) for p in a]
    ay = [float(p[1]) for p in a]
    bx = [float(p[0]) for p in b]
    by = [float(p[1]) for p in b]
    if _quad_less(ax, ay, bx, by):
        ax, ay, bx, by = bx, by, ax, ay
    area_a = poly_area(ax, ay)
    area_b = poly_area(bx, by)
    xs, ys = _clip_coords(ax, ay, bx, by)
    if len(xs) < 3:
        return 0.0
    inter = poly_area(xs, ys)
    if inter <= EPS_CONTACT * min(area_a, area_b):
        return 0.0
    val = inter / (area_a + area_b - inter)
    if val < 0.0:
        return 0.0
    if val > 1.0:
        return 1.0
    return val


def iou_matrix(quads_a, quads_b):
    """Pairwise rotated IoU: (n, 4, 2) x (m, 4, 2) -> (n, m) nested lists.

    The caller (rboxkit.kernels) wraps the result in an ndarray.
    """
    rows = []
    for qa in quads_a:
        a = [(float(qa[0][0]), float(qa[0][1])),
             (float(qa[1][0]), float(qa[1][1])),
             (float(qa[2][0]), float(qa[2][1])),
             (float(qa[3][0]), float(qa[3][1]))]
        rows.append([iou(a, qb) for qb in quads_b])
    return rows
