# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels.

Scalar mirror of kernels/_fallback.py: same operation order per element, so
results are bit-identical to the numpy fallback (the extension is compiled
with -ffp-contract=off to keep it that way).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt

NAME = "native"


def nearest_segment(cnp.float64_t[:, ::1] a, cnp.float64_t[:, ::1] b,
                    cnp.float64_t[::1] p):
    """Index of the segment [a_i, b_i] closest to point p, and the distance.

    Ties resolve to the lowest index. Degenerate (zero-length) segments are
    treated as points.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, best = 0
    cdef double px = p[0], py = p[1], pz = p[2]
    cdef double abx, aby, abz, apx, apy, apz
    cdef double denom, dot, t, ex, ey, ez, d2
    cdef double best_d2 = -1.0
    for i in range(n):
        abx = b[i, 0] - a[i, 0]
        aby = b[i, 1] - a[i, 1]
        abz = b[i, 2] - a[i, 2]
        apx = px - a[i, 0]
        apy = py - a[i, 1]
        apz = pz - a[i, 2]
        denom = abx * abx + aby * aby + abz * abz
        dot = apx * abx + apy * aby + apz * abz
        if denom > 0.0:
            t = dot / denom
        else:
            t = 0.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ex = apx - t * abx
        ey = apy - t * aby
        ez = apz - t * abz
        d2 = ex * ex + ey * ey + ez * ez
        if best_d2 < 0.0 or d2 < best_d2:
            best_d2 = d2
            best = i
    return best, sqrt(best_d2)


def simulate_steps(cnp.float64_t[::1] p1, cnp.float64_t[::1] p2,
                   double l_step, double w_rand, double arrive_radius,
                   Py_ssize_t max_steps, cnp.float64_t[:, ::1] normals,
                   cnp.float64_t[::1] box_lo, cnp.float64_t[::1] box_hi,
                   cnp.float64_t[:, ::1] out):
    """Random-walk-toward-target stepping loop; see the fallback docstring."""
    cdef double px = p1[0], py = p1[1], pz = p1[2]
    cdef double x2 = p2[0], y2 = p2[1], z2 = p2[2]
    cdef double lo0 = box_lo[0], lo1 = box_lo[1], lo2 = box_lo[2]
    cdef double hi0 = box_hi[0], hi1 = box_hi[1], hi2 = box_hi[2]
    cdef double w = w_rand
    cdef double dx, dy, dz, dist, ndist
    cdef double tx, ty, tz, rx, ry, rz, rn, ux, uy, uz, proj, lx, ly, lz
    cdef double ppx, ppy, ppz
    cdef Py_ssize_t i, k = 0
    cdef int stall = 0

    dx = x2 - px
    dy = y2 - py
    dz = z2 - pz
    dist = sqrt(dx * dx + dy * dy + dz * dz)
    if dist <= arrive_radius:
        return 0

    ppx = px
    ppy = py
    ppz = pz
    for i in range(max_steps - 1):
        tx = dx / dist
        ty = dy / dist
        tz = dz / dist
        rx = normals[i, 0]
        ry = normals[i, 1]
        rz = normals[i, 2]
        rn = sqrt(rx * rx + ry * ry + rz * rz)
        if rn > 0.0:
            ux = rx / rn
            uy = ry / rn
            uz = rz / rn
            proj = ux * tx + uy * ty + uz * tz
            lx = ux - proj * tx
            ly = uy - proj * ty
            lz = uz - proj * tz
        else:
            lx = 0.0
            ly = 0.0
            lz = 0.0
        px = px + l_step * (tx + w * lx)
        py = py + l_step * (ty + w * ly)
        pz = pz + l_step * (tz + w * lz)
        if px < lo0:
            px = lo0
        elif px > hi0:
            px = hi0
        if py < lo1:
            py = lo1
        elif py > hi1:
            py = hi1
        if pz < lo2:
            pz = lo2
        elif pz > hi2:
            pz = hi2
        dx = x2 - px
        dy = y2 - py
        dz = z2 - pz
        ndist = sqrt(dx * dx + dy * dy + dz * dz)
        if ndist <= arrive_radius:
            break
        if ndist >= dist:
            stall += 1
            if stall >= 20:
                w = w * 0.5
                stall = 0
        else:
            stall = 0
        dist = ndist
        if px != ppx or py != ppy or pz != ppz:
            out[k, 0] = px
            out[k, 1] = py
            out[k, 2] = pz
            k += 1
            ppx = px
            ppy = py
            ppz = pz
    return k


def draw_strokes(cnp.uint8_t[:, ::1] canvas, cnp.float64_t[:, ::1] strokes):
    """Min-blend thick stroke segments onto a uint8 canvas; see fallback."""
    cdef Py_ssize_t height = canvas.shape[0]
    cdef Py_ssize_t width = canvas.shape[1]
    cdef Py_ssize_t s, i, j, i0, i1, j0, j1
    cdef double x0, y0, x1, y1, g0, g1, hw
    cdef double minx, maxx, miny, maxy
    cdef double sx, sy, denom, cx, cy, qx, qy, t, ex, ey, d2, g
    cdef double hw2
    cdef long gi
    for s in range(strokes.shape[0]):
        x0 = strokes[s, 0]
        y0 = strokes[s, 1]
        x1 = strokes[s, 2]
        y1 = strokes[s, 3]
        g0 = strokes[s, 4]
        g1 = strokes[s, 5]
        hw = strokes[s, 6]
        minx = (x0 if x0 < x1 else x1) - hw
        maxx = (x0 if x0 > x1 else x1) + hw
        miny = (y0 if y0 < y1 else y1) - hw
        maxy = (y0 if y0 > y1 else y1) + hw
        j0 = <Py_ssize_t>floor(minx - 0.5)
        if j0 < 0:
            j0 = 0
        j1 = <Py_ssize_t>ceil(maxx + 0.5)
        if j1 > width - 1:
            j1 = width - 1
        i0 = <Py_ssize_t>floor(miny - 0.5)
        if i0 < 0:
            i0 = 0
        i1 = <Py_ssize_t>ceil(maxy + 0.5)
        if i1 > height - 1:
            i1 = height - 1
        if j1 < j0 or i1 < i0:
            continue
        sx = x1 - x0
        sy = y1 - y0
        denom = sx * sx + sy * sy
        hw2 = hw * hw
        for i in range(i0, i1 + 1):
            cy = <double>i + 0.5
            qy = cy - y0
            for j in range(j0, j1 + 1):
                cx = <double>j + 0.5
                qx = cx - x0
                if denom > 0.0:
                    t = (qx * sx + qy * sy) / denom
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                else:
                    t = 0.0
                ex = qx - t * sx
                ey = qy - t * sy
                d2 = ex * ex + ey * ey
                if d2 <= hw2:
                    g = g0 + t * (g1 - g0)
                    gi = <long>floor(g + 0.5)
                    if gi < 0:
                        gi = 0
                    elif gi > 255:
                        gi = 255
                    if gi < <long>canvas[i, j]:
                        canvas[i, j] = <cnp.uint8_t>gi
