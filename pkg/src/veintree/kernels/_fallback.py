"""Pure numpy/Python implementations of the hot kernels.

Reference semantics for the compiled backend: every arithmetic expression
here is written as the exact IEEE-754 double operation sequence the Cython
kernel performs, so the two backends produce bit-identical results (the
equivalence suite in tests/test_kernels.py asserts this).
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"


def nearest_segment(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> tuple[int, float]:
    """Index of the segment [a_i, b_i] closest to point p, and the distance.

    Ties resolve to the lowest index. Degenerate (zero-length) segments are
    treated as points.
    """
    ab = b - a
    ap = p[np.newaxis, :] - a
    denom = ab[:, 0] * ab[:, 0] + ab[:, 1] * ab[:, 1] + ab[:, 2] * ab[:, 2]
    dot = ap[:, 0] * ab[:, 0] + ap[:, 1] * ab[:, 1] + ap[:, 2] * ab[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0.0, dot / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    ex = ap[:, 0] - t * ab[:, 0]
    ey = ap[:, 1] - t * ab[:, 1]
    ez = ap[:, 2] - t * ab[:, 2]
    d2 = ex * ex + ey * ey + ez * ez
    idx = int(np.argmin(d2))
    return idx, math.sqrt(d2[idx])


def simulate_steps(
    p1: np.ndarray,
    p2: np.ndarray,
    l_step: float,
    w_rand: float,
    arrive_radius: float,
    max_steps: int,
    normals: np.ndarray,
    box_lo: np.ndarray,
    box_hi: np.ndarray,
    out: np.ndarray,
) -> int:
    """Random-walk-toward-target stepping loop.

    Writes intermediate points (neither endpoint) into `out` and returns how
    many were written (at most max_steps - 1, so the full polyline
    p1 + intermediates + p2 never exceeds max_steps + 1 points). `normals`
    supplies one pre-drawn 3-vector per potential step; the lateral
    disturbance is that vector normalized with its along-target component
    projected out. If the distance to target fails to decrease for 20
    consecutive steps the disturbance weight is halved.
    """
    px, py, pz = float(p1[0]), float(p1[1]), float(p1[2])
    x2, y2, z2 = float(p2[0]), float(p2[1]), float(p2[2])
    lo0, lo1, lo2 = float(box_lo[0]), float(box_lo[1]), float(box_lo[2])
    hi0, hi1, hi2 = float(box_hi[0]), float(box_hi[1]), float(box_hi[2])
    w = float(w_rand)

    dx = x2 - px
    dy = y2 - py
    dz = z2 - pz
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist <= arrive_radius:
        return 0

    k = 0
    stall = 0
    ppx, ppy, ppz = px, py, pz
    for i in range(max_steps - 1):
        tx = dx / dist
        ty = dy / dist
        tz = dz / dist
        rx = float(normals[i, 0])
        ry = float(normals[i, 1])
        rz = float(normals[i, 2])
        rn = math.sqrt(rx * rx + ry * ry + rz * rz)
        if rn > 0.0:
            ux = rx / rn
            uy = ry / rn
            uz = rz / rn
            proj = ux * tx + uy * ty + uz * tz
            lx = ux - proj * tx
            ly = uy - proj * ty
            lz = uz - proj * tz
        else:
            lx = ly = lz = 0.0
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
        ndist = math.sqrt(dx * dx + dy * dy + dz * dz)
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
            ppx, ppy, ppz = px, py, pz
    return k


def draw_strokes(canvas: np.ndarray, strokes: np.ndarray) -> None:
    """Min-blend thick stroke segments onto a uint8 canvas.

    Each stroke row is (x0, y0, x1, y1, g0, g1, half_width) in pixel
    coordinates; pixel centers sit at (col + 0.5, row + 0.5). A pixel is
    covered when its center lies within half_width of the segment (capsule
    test, giving round caps and joints); its value becomes
    min(existing, round(gray interpolated along the stroke)).
    """
    height, width = canvas.shape
    for s in range(strokes.shape[0]):
        x0, y0, x1, y1, g0, g1, hw = strokes[s]
        minx = min(x0, x1) - hw
        maxx = max(x0, x1) + hw
        miny = min(y0, y1) - hw
        maxy = max(y0, y1) + hw
        j0 = max(0, int(math.floor(minx - 0.5)))
        j1 = min(width - 1, int(math.ceil(maxx + 0.5)))
        i0 = max(0, int(math.floor(miny - 0.5)))
        i1 = min(height - 1, int(math.ceil(maxy + 0.5)))
        if j1 < j0 or i1 < i0:
            continue
        sx = x1 - x0
        sy = y1 - y0
        denom = sx * sx + sy * sy
        cx = np.arange(j0, j1 + 1, dtype=np.float64) + 0.5
        cy = np.arange(i0, i1 + 1, dtype=np.float64) + 0.5
        qx = cx[np.newaxis, :] - x0
        qy = cy[:, np.newaxis] - y0
        if denom > 0.0:
            t = (qx * sx + qy * sy) / denom
            t = np.clip(t, 0.0, 1.0)
        else:
            t = np.zeros((i1 - i0 + 1, j1 - j0 + 1), dtype=np.float64)
        ex = qx - t * sx
        ey = qy - t * sy
        d2 = ex * ex + ey * ey
        mask = d2 <= hw * hw
        if not mask.any():
            continue
        g = g0 + t * (g1 - g0)
        gi = np.clip(np.floor(g + 0.5), 0.0, 255.0).astype(np.uint8)
        sub = canvas[i0 : i1 + 1, j0 : j1 + 1]
        np.minimum(sub, np.where(mask, gi, 255), out=sub)
