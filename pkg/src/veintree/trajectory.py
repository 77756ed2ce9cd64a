"""Curved trajectories for straight vessel segments.

A straight cylinder projects to a line segment, but real vessels read as
curves, so each segment is replaced by a random walk that steps a fixed
length toward the far endpoint with a purely lateral random disturbance
mixed in. The walk is clamped to the domain box, guaranteed to terminate,
and always starts and ends exactly on the segment endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import simulate_steps
from .model import DomainBox, VascularTree, as_point


@dataclass(frozen=True)
class TsmParams:
    """Stepping knobs: step length (mm), disturbance weight, termination.

    max_steps None derives the cap per segment as 10x the straight-line step
    count; arrive_radius None falls back to l_step.
    """

    l_step: float = 0.5
    w_rand: float = 0.35
    max_steps: int | None = None
    arrive_radius: float | None = None

    def __post_init__(self) -> None:
        if self.l_step <= 0:
            raise ValueError("l_step must be positive")
        if self.w_rand < 0:
            raise ValueError("w_rand must be non-negative")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.arrive_radius is not None and self.arrive_radius <= 0:
            raise ValueError("arrive_radius must be positive")

    def effective_max_steps(self, chord: float) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return max(4, int(math.ceil(10.0 * chord / self.l_step)))

    def effective_arrive_radius(self) -> float:
        return self.l_step if self.arrive_radius is None else self.arrive_radius


@dataclass
class Polyline3:
    """Ordered 3D points with a vessel radius; per-point y doubles as depth."""

    points: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3 or len(self.points) < 2:
            raise ValueError("polyline needs at least two 3D points")
        if not self.radius > 0:
            raise ValueError("polyline radius must be positive")

    def chord_length(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    def arc_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def simulate_trajectory(
    p1,
    p2,
    params: TsmParams,
    rng: np.random.Generator,
    box: DomainBox | None = None,
    radius: float = 1.0,
) -> Polyline3:
    """Curved polyline from p1 to p2 (both reproduced exactly).

    Each step moves l_step along the unit direction toward p2 plus w_rand
    times a lateral unit-sphere disturbance (its along-target component is
    projected out). The walk stops as soon as it comes within arrive_radius
    of p2 or the step cap is hit; either way p2 is appended, so the polyline
    never exceeds max_steps + 1 points. If the distance to p2 fails to
    decrease for 20 consecutive steps the disturbance weight halves.
    """
    a = as_point(p1)
    b = as_point(p2)
    if np.array_equal(a, b):
        raise ValueError("trajectory endpoints must differ")
    box = box if box is not None else DomainBox()
    chord = float(np.linalg.norm(b - a))
    max_steps = params.effective_max_steps(chord)
    arrive = params.effective_arrive_radius()
    # Fixed-size draw keeps the rng stream layout independent of how many
    # steps the walk actually takes.
    normals = rng.standard_normal((max_steps, 3))
    buf = np.empty((max_steps, 3), dtype=np.float64)
    k = simulate_steps(
        a, b, params.l_step, params.w_rand, arrive, max_steps,
        normals, box.lo, box.hi, buf,
    )
    points = np.empty((k + 2, 3), dtype=np.float64)
    points[0] = a
    if k:
        points[1 : k + 1] = buf[:k]
    points[k + 1] = b
    return Polyline3(points=points, radius=radius)


def tree_to_polylines(
    tree: VascularTree,
    params: TsmParams,
    rng: np.random.Generator,
    box: DomainBox | None = None,
) -> list[Polyline3]:
    """One curved polyline per segment, in segment-id order.

    Segment endpoints become polyline endpoints verbatim, so polylines of
    adjacent segments meet exactly at their shared node.
    """
    polys = []
    for sid in sorted(tree.segments):
        seg = tree.segments[sid]
        polys.append(
            simulate_trajectory(
                tree.nodes[seg.from_node],
                tree.nodes[seg.to_node],
                params,
                rng,
                box=box,
                radius=seg.radius,
            )
        )
    return polys
