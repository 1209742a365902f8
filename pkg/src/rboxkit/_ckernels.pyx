# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels: convex clipping, overlap area, rotated IoU.

Statement-for-statement mirror of rboxkit._pykernels (see that module for
the algorithm notes). Compiled with -ffp-contract=off so both backends
produce bit-identical doubles. Keep the two files in sync.
"""

from libc.math cimport sqrt, fabs

import numpy as np

BACKEND = "cython"

cdef double EPS_EDGE = 1e-9
cdef double EPS_MERGE = 1e-9
cdef double EPS_CONTACT = 1e-12

# intersection of two convex quads has at most 8 vertices; intermediate
# Sutherland-Hodgman passes stay below 4 + #halfplanes = 8, 16 is headroom
DEF MAXV = 16


cdef double _poly_area(const double* xs, const double* ys, int n) nogil:
    cdef double acc = 0.0
    cdef int i, j
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        acc += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * acc


cdef int _clip_coords(const double* ax, const double* ay,
                      const double* bx, const double* by,
                      double* rx, double* ry) nogil:
    """Clip CCW quad a by CCW quad b; writes vertices to rx/ry, returns count."""
    cdef double in_x[MAXV]
    cdef double in_y[MAXV]
    cdef int n_out = 4
    cdef int n_in, e, f, i
    cdef double px, py, qx, qy, ex, ey, tol
    cdef double sx, sy, vx, vy
    cdef double dcx, dcy, dpx, dpy, n1, n2, den
    cdef bint s_in, v_in

    for i in range(4):
        rx[i] = ax[i]
        ry[i] = ay[i]

    for e in range(4):
        if n_out == 0:
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
        tol = -EPS_EDGE * sqrt(ex * ex + ey * ey)

        n_in = n_out
        for i in range(n_in):
            in_x[i] = rx[i]
            in_y[i] = ry[i]
        n_out = 0

        sx = in_x[n_in - 1]
        sy = in_y[n_in - 1]
        s_in = ex * (sy - py) - ey * (sx - px) >= tol
        for i in range(n_in):
            vx = in_x[i]
            vy = in_y[i]
            v_in = ex * (vy - py) - ey * (vx - px) >= tol
            if v_in != s_in:
                dcx = px - qx
                dcy = py - qy
                dpx = sx - vx
                dpy = sy - vy
                n1 = px * qy - py * qx
                n2 = sx * vy - sy * vx
                den = dcx * dpy - dcy * dpx
                rx[n_out] = (n1 * dpx - n2 * dcx) / den
                ry[n_out] = (n1 * dpy - n2 * dcy) / den
                n_out += 1
            if v_in:
                rx[n_out] = vx
                ry[n_out] = vy
                n_out += 1
            sx = vx
            sy = vy
            s_in = v_in
    return n_out


cdef int _merge_close(double* xs, double* ys, int n) nogil:
    cdef double lim = EPS_MERGE * EPS_MERGE
    cdef int m = 0
    cdef int i
    cdef double dx, dy
    for i in range(n):
        if m > 0:
            dx = xs[i] - xs[m - 1]
            dy = ys[i] - ys[m - 1]
            if dx * dx + dy * dy < lim:
                continue
        xs[m] = xs[i]
        ys[m] = ys[i]
        m += 1
    while m > 1:
        dx = xs[0] - xs[m - 1]
        dy = ys[0] - ys[m - 1]
        if dx * dx + dy * dy < lim:
            m -= 1
        else:
            break
    return m


cdef bint _quad_less(const double* ax, const double* ay,
                     const double* bx, const double* by) nogil:
    """Lexicographic corner order, used to canonicalize operand order."""
    cdef int i
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


cdef double _intersect_area(const double* ax, const double* ay,
                            const double* bx, const double* by) nogil:
    cdef double rx[MAXV]
    cdef double ry[MAXV]
    cdef const double* tmp
    cdef int n
    cdef double area, floor_
    if _quad_less(ax, ay, bx, by):
        tmp = ax; ax = bx; bx = tmp
        tmp = ay; ay = by; by = tmp
    n = _clip_coords(ax, ay, bx, by, rx, ry)
    if n < 3:
        return 0.0
    area = _poly_area(rx, ry, n)
    floor_ = fabs(_poly_area(ax, ay, 4))
    if fabs(_poly_area(bx, by, 4)) < floor_:
        floor_ = fabs(_poly_area(bx, by, 4))
    if area <= EPS_CONTACT * floor_:
        return 0.0
    return area


cdef double _iou(const double* ax, const double* ay,
                 const double* bx, const double* by) nogil:
    cdef double rx[MAXV]
    cdef double ry[MAXV]
    cdef const double* tmp
    cdef double area_a, area_b
    cdef int n
    cdef double inter, smaller, val
    if _quad_less(ax, ay, bx, by):
        tmp = ax; ax = bx; bx = tmp
        tmp = ay; ay = by; by = tmp
    area_a = _poly_area(ax, ay, 4)
    area_b = _poly_area(bx, by, 4)
    n = _clip_coords(ax, ay, bx, by, rx, ry)
    if n < 3:
        return 0.0
    inter = _poly_area(rx, ry, n)
    smaller = area_a if area_a < area_b else area_b
    if inter <= EPS_CONTACT * smaller:
        return 0.0
    val = inter / (area_a + area_b - inter)
    if val < 0.0:
        return 0.0
    if val > 1.0:
        return 1.0
    return val


cdef void _load4(object quad, double* xs, double* ys):
    cdef int i
    for i in range(4):
        xs[i] = quad[i][0]
        ys[i] = quad[i][1]


def clip_quads(a, b):
    """Intersection polygon of convex CCW quads, close vertices merged."""
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    cdef double rx[MAXV]
    cdef double ry[MAXV]
    cdef int n, i
    cdef double area, floor_
    _load4(a, ax, ay)
    _load4(b, bx, by)
    n = _clip_coords(ax, ay, bx, by, rx, ry)
    if n < 3:
        return []
    area = _poly_area(rx, ry, n)
    floor_ = fabs(_poly_area(ax, ay, 4))
    if fabs(_poly_area(bx, by, 4)) < floor_:
        floor_ = fabs(_poly_area(bx, by, 4))
    if area <= EPS_CONTACT * floor_:
        return []
    n = _merge_close(rx, ry, n)
    if n < 3:
        return []
    return [(rx[i], ry[i]) for i in range(n)]


def intersect_area(a, b):
    """Overlap area of two convex CCW quads (0.0 for contact-only)."""
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    _load4(a, ax, ay)
    _load4(b, bx, by)
    return _intersect_area(ax, ay, bx, by)


def iou(a, b):
    """Rotated IoU of two convex CCW quads, in [0, 1]."""
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    _load4(a, ax, ay)
    _load4(b, bx, by)
    return _iou(ax, ay, bx, by)


def iou_matrix(quads_a, quads_b):
    """Pairwise rotated IoU of two stacks of quads: (n,4,2) x (m,4,2) -> (n,m)."""
    cdef const double[:, :, ::1] A = np.ascontiguousarray(quads_a, dtype=np.float64)
    cdef const double[:, :, ::1] B = np.ascontiguousarray(quads_b, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double ax[4]
    cdef double ay[4]
    cdef double bx[4]
    cdef double by[4]
    cdef Py_ssize_t i, j
    cdef int k
    with nogil:
        for i in range(n):
            for k in range(4):
                ax[k] = A[i, k, 0]
                ay[k] = A[i, k, 1]
            for j in range(m):
                for k in range(4):
                    bx[k] = B[j, k, 0]
                    by[k] = B[j, k, 1]
                O[i, j] = _iou(ax, ay, bx, by)
    return out
