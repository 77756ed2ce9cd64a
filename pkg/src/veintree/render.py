"""Projection and rasterization of vascular polylines into gray patterns.

The tree rotates a few degrees about the z-axis per view, projects
orthographically onto the x-z plane, and rasterizes as thick strokes whose
intensity encodes depth: the grayscale value grows linearly from 0 at the
shallowest depth to (up to) 255 at the deepest, so shallow vessels draw dark
on the white background and deep ones fade out. Palmprint-like creases are
cubic Bezier strokes flattened adaptively and min-blended the same way.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .kernels import draw_strokes
from .model import DomainBox
from .trajectory import Polyline3

log = logging.getLogger(__name__)

WHITE = 255
# Pixels are covered by a capsule distance test; a half-width below
# sqrt(1/2) can miss every pixel center along a diagonal, so 1 px strokes
# get a connectivity floor.
_MIN_HALF_WIDTH = math.sqrt(0.5)
# Strokes longer than this are split before hitting the kernels so both
# backends see identical stroke lists (the fallback batches per stroke).
_MAX_STROKE_PX = 3.0


@dataclass(frozen=True)
class ViewParams:
    """One view: rotation about z (degrees) and depth-shading jitter."""

    theta_z: float = 0.0
    w_random: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.w_random <= 1.0:
            raise ValueError("w_random must lie in (0, 1]")


@dataclass(frozen=True)
class CreaseParams:
    """Crease synthesis knobs.

    control_regions are (x0, y0, x1, y1) rectangles in [0,1]-relative image
    coordinates; the defaults echo the three principal palm lines as
    horizontal bands. Count/width/intensity ranges are inclusive.
    """

    n_creases: tuple[int, int] = (2, 4)
    control_regions: tuple[tuple[float, float, float, float], ...] = (
        (0.10, 0.19, 0.90, 0.31),
        (0.10, 0.39, 0.90, 0.51),
        (0.10, 0.59, 0.90, 0.71),
    )
    width_px: tuple[int, int] = (1, 3)
    intensity: tuple[int, int] = (40, 110)

    def __post_init__(self) -> None:
        if self.n_creases[0] > self.n_creases[1] or self.n_creases[0] < 0:
            raise ValueError("n_creases range is empty or negative")
        if not self.control_regions:
            raise ValueError("need at least one control region")
        for x0, y0, x1, y1 in self.control_regions:
            if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
                raise ValueError("control regions must be non-empty and inside the image")
        if self.width_px[0] > self.width_px[1] or self.width_px[0] < 1:
            raise ValueError("width_px range is empty or below 1")
        if self.intensity[0] > self.intensity[1] or not 0 <= self.intensity[0] <= 255:
            raise ValueError("intensity range is empty or outside [0, 255]")


@dataclass(frozen=True)
class CreaseStroke:
    """A flattened crease: pixel-space polyline, width and gray level."""

    points: np.ndarray
    width_px: int
    intensity: int


def rotate_z(
    polys: list[Polyline3], theta_deg: float, pivot=None
) -> list[Polyline3]:
    """Rotate polylines about a vertical axis through the pivot; z untouched."""
    pivot = DomainBox().center if pivot is None else np.asarray(pivot, dtype=np.float64)
    theta = math.radians(theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    out = []
    for poly in polys:
        pts = poly.points.copy()
        x = pts[:, 0] - pivot[0]
        y = pts[:, 1] - pivot[1]
        pts[:, 0] = pivot[0] + c * x - s * y
        pts[:, 1] = pivot[1] + s * x + c * y
        out.append(Polyline3(points=pts, radius=poly.radius))
    return out


def depth_to_gray(y, y_min: float, y_max: float, w_random: float):
    """Depth to gray: 0 at y_min rising linearly to w_random*255 at y_max.

    Accepts scalars or arrays; rounds half-up and clamps to [0, 255].
    A degenerate y_min == y_max band maps everything to 0.
    """
    if y_max == y_min:
        log.debug("degenerate depth range (y_min == y_max); mapping to gray 0")
        return np.zeros_like(np.asarray(y, dtype=np.int64)) if np.ndim(y) else 0
    g = (np.asarray(y, dtype=np.float64) - y_min) * w_random / (y_max - y_min) * 255.0
    g = np.clip(np.floor(g + 0.5), 0.0, 255.0)
    return g.astype(np.int64) if np.ndim(y) else int(g)


def _split_strokes(
    px: np.ndarray, py: np.ndarray, gray: np.ndarray, half_width: float
) -> np.ndarray:
    """Chop a pixel-space polyline into stroke rows (x0,y0,x1,y1,g0,g1,hw).

    Chords longer than _MAX_STROKE_PX split into equal parts (the capsule
    union and interpolated grays are unchanged by splitting) so the fallback
    backend can batch fixed-size bounding boxes.
    """
    lengths = np.hypot(np.diff(px), np.diff(py))
    if not len(lengths):
        return np.empty((0, 7), dtype=np.float64)
    if lengths.max() <= _MAX_STROKE_PX:
        rows = np.empty((len(lengths), 7), dtype=np.float64)
        rows[:, 0] = px[:-1]
        rows[:, 1] = py[:-1]
        rows[:, 2] = px[1:]
        rows[:, 3] = py[1:]
        rows[:, 4] = gray[:-1]
        rows[:, 5] = gray[1:]
        rows[:, 6] = half_width
        return rows
    rows_list = []
    for k in range(len(px) - 1):
        x0, y0, g0 = px[k], py[k], gray[k]
        x1, y1, g1 = px[k + 1], py[k + 1], gray[k + 1]
        n_sub = max(1, int(math.ceil(lengths[k] / _MAX_STROKE_PX)))
        ts = np.linspace(0.0, 1.0, n_sub + 1)
        xs = x0 + ts * (x1 - x0)
        ys = y0 + ts * (y1 - y0)
        gs = g0 + ts * (g1 - g0)
        sub = np.empty((n_sub, 7), dtype=np.float64)
        sub[:, 0] = xs[:-1]
        sub[:, 1] = ys[:-1]
        sub[:, 2] = xs[1:]
        sub[:, 3] = ys[1:]
        sub[:, 4] = gs[:-1]
        sub[:, 5] = gs[1:]
        sub[:, 6] = half_width
        rows_list.append(sub)
    return np.concatenate(rows_list, axis=0)


def stroke_width_px(radius: float, pixels_per_mm: float) -> int:
    """Rendered stroke width: round(vessel diameter in px), at least 1."""
    return max(1, int(math.floor(2.0 * radius * pixels_per_mm + 0.5)))


def project_and_rasterize(
    polys: list[Polyline3],
    view: ViewParams,
    box: DomainBox,
    img_size: tuple[int, int] = (128, 128),
) -> np.ndarray:
    """Render one view of a tree's polylines to a uint8 pattern image.

    Rotates about z through the box center, projects orthographically onto
    the x-z plane, maps the palm plane anisotropically onto the full raster
    (no letterbox margins), and min-blends depth-shaded strokes onto a white
    background. Depth bounds come from all polyline points of this render.
    """
    img_w, img_h = img_size
    canvas = np.full((img_h, img_w), WHITE, dtype=np.uint8)
    if not polys:
        return canvas
    rotated = rotate_z(polys, view.theta_z, pivot=box.center)
    all_y = np.concatenate([p.points[:, 1] for p in rotated])
    y_min = float(all_y.min())
    y_max = float(all_y.max())
    sx = img_w / box.width
    sy = img_h / box.height
    ppm = min(sx, sy)
    stroke_blocks = []
    for poly in rotated:
        width = stroke_width_px(poly.radius, ppm)
        hw = max(width / 2.0, _MIN_HALF_WIDTH)
        gray = depth_to_gray(poly.points[:, 1], y_min, y_max, view.w_random).astype(
            np.float64
        )
        px = poly.points[:, 0] * sx
        py = (box.height - poly.points[:, 2]) * sy
        stroke_blocks.append(_split_strokes(px, py, gray, hw))
    strokes = np.concatenate(stroke_blocks, axis=0)
    draw_strokes(canvas, strokes)
    return canvas


def _flatten_cubic(ctrl: np.ndarray, tol: float = 0.25) -> np.ndarray:
    """Adaptive cubic Bezier flattening by de Casteljau subdivision.

    Subdivides until both inner control points sit within tol of the chord,
    so every emitted chord deviates from the true curve by less than tol.
    """
    out = [ctrl[0]]

    def recurse(p0, p1, p2, p3, depth):
        d = p3 - p0
        chord = math.hypot(d[0], d[1])
        if chord < 1e-12:
            d1 = math.hypot(*(p1 - p0))
            d2 = math.hypot(*(p2 - p0))
        else:
            d1 = abs((p1[0] - p0[0]) * d[1] - (p1[1] - p0[1]) * d[0]) / chord
            d2 = abs((p2[0] - p0[0]) * d[1] - (p2[1] - p0[1]) * d[0]) / chord
        if depth >= 24 or max(d1, d2) <= tol:
            out.append(p3)
            return
        p01 = 0.5 * (p0 + p1)
        p12 = 0.5 * (p1 + p2)
        p23 = 0.5 * (p2 + p3)
        p012 = 0.5 * (p01 + p12)
        p123 = 0.5 * (p12 + p23)
        mid = 0.5 * (p012 + p123)
        recurse(p0, p01, p012, mid, depth + 1)
        recurse(mid, p123, p23, p3, depth + 1)

    recurse(ctrl[0], ctrl[1], ctrl[2], ctrl[3], 0)
    return np.asarray(out, dtype=np.float64)


def generate_creases(
    params: CreaseParams,
    rng: np.random.Generator,
    img_size: tuple[int, int] = (128, 128),
) -> list[CreaseStroke]:
    """Sample palmprint-like creases as flattened cubic Bezier strokes."""
    img_w, img_h = img_size
    lo, hi = params.n_creases
    n = int(rng.integers(lo, hi + 1))
    strokes = []
    for _ in range(n):
        region = params.control_regions[int(rng.integers(0, len(params.control_regions)))]
        x0, y0, x1, y1 = region
        ctrl = np.empty((4, 2), dtype=np.float64)
        ctrl[:, 0] = (x0 + (x1 - x0) * rng.random(4)) * img_w
        ctrl[:, 1] = (y0 + (y1 - y0) * rng.random(4)) * img_h
        width = int(rng.integers(params.width_px[0], params.width_px[1] + 1))
        intensity = int(rng.integers(params.intensity[0], params.intensity[1] + 1))
        strokes.append(
            CreaseStroke(points=_flatten_cubic(ctrl), width_px=width, intensity=intensity)
        )
    return strokes


def blend_creases(pattern: np.ndarray, strokes: list[CreaseStroke]) -> np.ndarray:
    """Min-blend crease strokes into a copy of the pattern (idempotent)."""
    out = pattern.copy()
    if not strokes:
        return out
    blocks = []
    for stroke in strokes:
        hw = max(stroke.width_px / 2.0, _MIN_HALF_WIDTH)
        gray = np.full(len(stroke.points), float(stroke.intensity))
        blocks.append(
            _split_strokes(stroke.points[:, 0], stroke.points[:, 1], gray, hw)
        )
    draw_strokes(out, np.concatenate(blocks, axis=0))
    return out
