"""Branch growth by iterative volume-minimizing point insertion.

New terminal points are sampled uniformly in the domain box under a
minimum-distance-to-tree threshold (decayed geometrically when the domain
gets crowded), attached to their nearest segment, and joined through a
bifurcation node placed at the weighted geometric median of the three
junction anchors, with weights equal to the squared radii of the emanating
segments. That median minimizes total cylinder volume for fixed radii; it is
computed by Weiszfeld iteration. Radii themselves are fixed by the
outflow-count policy and reapplied tree-wide after every insertion, followed
by one re-weighted refinement of the junction position.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BRANCH,
    DomainBox,
    RadiusPolicy,
    VascularTree,
    VeinTreeError,
    _apply_radius_policy_inplace,
    as_point,
    nearest_segment,
)
from .trunks import TrunkInstance

log = logging.getLogger(__name__)

_D_MIN_FLOOR = 1e-3
_ANCHOR_EPS = 1e-12
_ANCHOR_NUDGE = 1e-9
_COINCIDE_TOL = 1e-9


class SaturatedDomainError(VeinTreeError):
    """Candidate sampling decayed d_min below the floor: no free space left."""


@dataclass(frozen=True)
class GrowthParams:
    """Knobs for branch growth."""

    n_points: int = 70
    d_min: float = 3.0
    d_min_decay: float = 0.9
    max_candidate_attempts: int = 50
    weiszfeld_tol: float = 1e-6
    weiszfeld_max_iter: int = 200

    def __post_init__(self) -> None:
        if self.n_points < 0:
            raise ValueError("n_points must be >= 0")
        if not 0.0 < self.d_min_decay < 1.0:
            raise ValueError("d_min_decay must lie in (0, 1)")
        if self.weiszfeld_tol <= 0 or self.d_min <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_candidate_attempts < 1 or self.weiszfeld_max_iter < 1:
            raise ValueError("attempt/iteration caps must be >= 1")


@dataclass(frozen=True)
class BifurcationProblem:
    """Three junction anchors with per-segment weights (squared radii, mm^2).

    p0 is the parent inflow end, p1 the old outflow end, p2 the new point.
    """

    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    w0: float
    w1: float
    w2: float

    def __post_init__(self) -> None:
        if min(self.w0, self.w1, self.w2) <= 0:
            raise ValueError("bifurcation weights must be positive")


@dataclass
class CandidateState:
    """Mutable sampling state: the current (possibly decayed) d_min."""

    d_min: float


def sample_candidate(
    box: DomainBox,
    tree: VascularTree,
    params: GrowthParams,
    rng: np.random.Generator,
    state: CandidateState | None = None,
) -> np.ndarray:
    """Uniform point in the box at distance >= current d_min from the tree.

    After max_candidate_attempts rejections d_min decays by d_min_decay and
    sampling retries; decay below the 1e-3 mm floor raises
    SaturatedDomainError. Passing a CandidateState keeps the decayed
    threshold across calls (one growth run shares a single state).
    """
    if not tree.segments:
        raise VeinTreeError("cannot sample candidates against an empty tree")
    if state is None:
        state = CandidateState(d_min=params.d_min)
    lo = box.lo
    span = box.hi - box.lo
    while True:
        for _ in range(params.max_candidate_attempts):
            p = lo + span * rng.random(3)
            _, dist = nearest_segment(tree, p)
            if dist >= state.d_min:
                return p
        state.d_min *= params.d_min_decay
        log.debug("candidate sampling decayed d_min to %.4f mm", state.d_min)
        if state.d_min < _D_MIN_FLOOR:
            raise SaturatedDomainError(
                f"d_min decayed below {_D_MIN_FLOOR} mm; domain saturated"
            )


def weiszfeld(
    anchors: np.ndarray,
    weights: np.ndarray,
    start: np.ndarray | None = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> tuple[np.ndarray, list[float]]:
    """Weighted geometric median by Weiszfeld iteration.

    Starts at the weighted centroid unless given a start point, stops when
    the update step falls below tol or max_iter is reached, and returns the
    minimizer estimate plus the objective value at every iterate (start
    included). Iterates landing within 1e-12 of an anchor are nudged 1e-9
    along +x, the standard escape from the undefined gradient there.
    """
    a = np.asarray(anchors, dtype=np.float64)
    w = [float(v) for v in np.asarray(weights, dtype=np.float64)]
    pts = [(float(p[0]), float(p[1]), float(p[2])) for p in a]
    k = len(pts)

    # Scalar arithmetic throughout: the solver runs on 3 anchors hundreds of
    # times per tree, where ndarray call overhead dwarfs the math.
    def objective(x: float, y: float, z: float) -> float:
        total = 0.0
        for (ax, ay, az), wi in zip(pts, w):
            total += wi * math.sqrt((x - ax) ** 2 + (y - ay) ** 2 + (z - az) ** 2)
        return total

    spread = max(
        math.sqrt((px - pts[0][0]) ** 2 + (py - pts[0][1]) ** 2 + (pz - pts[0][2]) ** 2)
        for px, py, pz in pts
    )
    if spread < _ANCHOR_EPS:
        return a[0].copy(), [objective(*pts[0])]

    if start is None:
        wsum = sum(w)
        x = sum(wi * p[0] for wi, p in zip(w, pts)) / wsum
        y = sum(wi * p[1] for wi, p in zip(w, pts)) / wsum
        z = sum(wi * p[2] for wi, p in zip(w, pts)) / wsum
    else:
        sp = as_point(start)
        x, y, z = float(sp[0]), float(sp[1]), float(sp[2])
    history = [objective(x, y, z)]
    dists = [0.0] * k
    for _ in range(max_iter):
        nudged = False
        for i, (ax, ay, az) in enumerate(pts):
            d = math.sqrt((x - ax) ** 2 + (y - ay) ** 2 + (z - az) ** 2)
            if d < _ANCHOR_EPS and not nudged:
                x += _ANCHOR_NUDGE
                nudged = True
                d = math.sqrt((x - ax) ** 2 + (y - ay) ** 2 + (z - az) ** 2)
            dists[i] = max(d, _ANCHOR_EPS)
        inv_sum = nx = ny = nz = 0.0
        for (ax, ay, az), wi, d in zip(pts, w, dists):
            inv = wi / d
            inv_sum += inv
            nx += inv * ax
            ny += inv * ay
            nz += inv * az
        nx /= inv_sum
        ny /= inv_sum
        nz /= inv_sum
        step = math.sqrt((nx - x) ** 2 + (ny - y) ** 2 + (nz - z) ** 2)
        x, y, z = nx, ny, nz
        history.append(objective(x, y, z))
        if step < tol:
            break
    return np.array([x, y, z]), history


def optimal_bifurcation(
    prob: BifurcationProblem,
    tol: float = 1e-6,
    max_iter: int = 200,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Junction point minimizing w0|p-p0| + w1|p-p1| + w2|p-p2|.

    With weights equal to squared radii this is the volume-minimizing
    position of the bifurcation for fixed radii. The result lies in the
    closed triangle of the three anchors (every Weiszfeld iterate is a
    convex combination of them).
    """
    anchors = np.stack([as_point(prob.p0), as_point(prob.p1), as_point(prob.p2)])
    weights = np.array([prob.w0, prob.w1, prob.w2])
    p, _ = weiszfeld(anchors, weights, start=start, tol=tol, max_iter=max_iter)
    return p


def _resolve_junction(
    p: np.ndarray, p0: np.ndarray, p1: np.ndarray
) -> np.ndarray:
    """Guard against junctions collapsing onto a parent-segment endpoint."""
    if (
        np.linalg.norm(p - p0) < _COINCIDE_TOL
        or np.linalg.norm(p - p1) < _COINCIDE_TOL
    ):
        log.debug("junction coincided with a segment endpoint; using midpoint")
        return 0.5 * (p0 + p1)
    return p


def _insert_point_inplace(
    tree: VascularTree,
    p_new: np.ndarray,
    policy: RadiusPolicy,
    params: GrowthParams,
    junction: str = "optimal",
) -> None:
    sid, _ = nearest_segment(tree, p_new)
    seg = tree.segments[sid]
    p0 = tree.nodes[seg.from_node]
    p1 = tree.nodes[seg.to_node]
    r_old = seg.radius
    w_seed = r_old * r_old

    if junction == "midpoint":
        p = 0.5 * (p0 + p1)
    elif junction == "optimal":
        prob = BifurcationProblem(p0, p1, p_new, w_seed, w_seed, w_seed)
        p = optimal_bifurcation(prob, params.weiszfeld_tol, params.weiszfeld_max_iter)
        p = _resolve_junction(p, p0, p1)
    else:
        raise ValueError(f"unknown junction mode {junction!r}")

    tree.remove_segment(sid)
    bif = tree.add_node(p)
    tip = tree.add_node(p_new)
    s0 = tree.add_segment(seg.from_node, bif, r_old, origin=seg.origin)
    s1 = tree.add_segment(bif, seg.to_node, r_old, origin=seg.origin)
    s2 = tree.add_segment(bif, tip, r_old, origin=BRANCH)
    _apply_radius_policy_inplace(tree, policy)

    if junction == "optimal":
        # Re-weighting pass: radii are fixed by outflow counts, so one
        # re-solve with the recomputed radii gives the final position.
        prob = BifurcationProblem(
            p0,
            p1,
            p_new,
            tree.segments[s0].radius ** 2,
            tree.segments[s1].radius ** 2,
            tree.segments[s2].radius ** 2,
        )
        p = optimal_bifurcation(
            prob, params.weiszfeld_tol, params.weiszfeld_max_iter, start=p
        )
        p = _resolve_junction(p, p0, p1)
        tree.move_node(bif, p)


def insert_point(
    tree: VascularTree,
    p_new,
    policy: RadiusPolicy,
    params: GrowthParams | None = None,
    junction: str = "optimal",
) -> VascularTree:
    """Copy of the tree with p_new attached through an optimized bifurcation.

    junction="midpoint" skips the optimization and drops the junction at the
    parent-segment midpoint (the comparison oracle for volume optimality).
    """
    params = params or GrowthParams()
    updated = tree.copy()
    _insert_point_inplace(updated, as_point(p_new), policy, params, junction)
    return updated


def grow(
    trunk: TrunkInstance,
    params: GrowthParams,
    policy: RadiusPolicy,
    rng: np.random.Generator,
    box: DomainBox | None = None,
) -> VascularTree:
    """Apply n_points candidate insertions to a trunk; deterministic per rng."""
    box = box if box is not None else DomainBox()
    tree = trunk.tree.copy()
    state = CandidateState(d_min=params.d_min)
    for _ in range(params.n_points):
        p = sample_candidate(box, tree, params, rng, state)
        _insert_point_inplace(tree, p, policy, params)
    tree.validate(box)
    return tree
