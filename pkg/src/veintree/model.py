"""Geometric and graph primitives for 3D palm vascular trees.

A tree is a directed forest of 3D nodes (millimetres) connected by
radius-carrying segments, rooted at one or more inflow nodes and living
inside a rectangular palm-shaped domain box. Segment radii follow a single
policy: base radius plus a per-downstream-endpoint increment, reapplied
tree-wide after every structural change so radii stay globally consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import nearest_segment as _nearest_segment_kernel

GEOM_TOL = 1e-9

TRUNK = "trunk"
BRANCH = "branch"


class VeinTreeError(Exception):
    """Base error for this package."""


class InvalidTreeError(VeinTreeError):
    """A vascular tree violates a structural or geometric invariant."""


def as_point(p) -> np.ndarray:
    """Coerce to a finite (3,) float64 point."""
    a = np.asarray(p, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"point has non-finite coordinates: {a}")
    return a


@dataclass(frozen=True)
class DomainBox:
    """Rectangular prism modeling palm width x thickness x height (mm).

    x spans (0, width), y (the depth axis) spans y_center +- thickness/2,
    z spans (0, height).
    """

    width: float = 70.0
    thickness: float = 14.0
    height: float = 80.0
    y_center: float = 40.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.thickness <= 0 or self.height <= 0:
            raise ValueError("box dimensions must be positive")

    @property
    def y_lo(self) -> float:
        return self.y_center - self.thickness / 2.0

    @property
    def y_hi(self) -> float:
        return self.y_center + self.thickness / 2.0

    @property
    def lo(self) -> np.ndarray:
        return np.array([0.0, self.y_lo, 0.0])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.width, self.y_hi, self.height])

    @property
    def center(self) -> np.ndarray:
        return np.array([self.width / 2.0, self.y_center, self.height / 2.0])

    def contains(self, p, tol: float = 0.0) -> bool:
        """Open-interval membership; tol > 0 relaxes to a closed interval."""
        x, y, z = as_point(p)
        if tol > 0.0:
            return (
                -tol <= x <= self.width + tol
                and self.y_lo - tol <= y <= self.y_hi + tol
                and -tol <= z <= self.height + tol
            )
        return 0.0 < x < self.width and self.y_lo < y < self.y_hi and 0.0 < z < self.height

    def clamp(self, p) -> np.ndarray:
        return np.minimum(np.maximum(as_point(p), self.lo), self.hi)


@dataclass(frozen=True)
class RadiusPolicy:
    """Segment radius = r0 + (downstream endpoint count) * ratio_e, in mm."""

    r0: float = 0.4
    ratio_e: float = 0.08

    def __post_init__(self) -> None:
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.ratio_e < 0:
            raise ValueError("ratio_e must be non-negative")

    def radius(self, n_outflow: int) -> float:
        return self.r0 + n_outflow * self.ratio_e


@dataclass
class Segment:
    """Directed vessel segment from its inflow node to its outflow node."""

    from_node: int
    to_node: int
    radius: float
    origin: str = BRANCH

    def __post_init__(self) -> None:
        if self.from_node == self.to_node:
            raise ValueError("segment endpoints must differ")
        if not self.radius > 0:
            raise ValueError("segment radius must be positive")
        if self.origin not in (TRUNK, BRANCH):
            raise ValueError(f"unknown segment origin {self.origin!r}")


class VascularTree:
    """Directed forest of 3D nodes and radius-carrying segments.

    Node and segment ids are dense non-negative integers assigned in
    creation order. Construction mutates; once handed to consumers a tree is
    treated as immutable (operations that change it return a copy).
    """

    def __init__(self) -> None:
        self.nodes: dict[int, np.ndarray] = {}
        self.segments: dict[int, Segment] = {}
        self.roots: list[int] = []
        self._next_node = 0
        self._next_segment = 0
        self._arrays: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    # -- construction ------------------------------------------------------

    def add_node(self, p, *, root: bool = False) -> int:
        nid = self._next_node
        self._next_node += 1
        self.nodes[nid] = as_point(p)
        if root:
            self.roots.append(nid)
        self._arrays = None
        return nid

    def add_segment(self, from_node: int, to_node: int, radius: float,
                    origin: str = BRANCH) -> int:
        if from_node not in self.nodes or to_node not in self.nodes:
            raise KeyError("segment endpoints must be existing nodes")
        sid = self._next_segment
        self._next_segment += 1
        self.segments[sid] = Segment(from_node, to_node, radius, origin)
        self._arrays = None
        return sid

    def remove_segment(self, seg_id: int) -> Segment:
        seg = self.segments.pop(seg_id)
        self._arrays = None
        return seg

    def set_radius(self, seg_id: int, radius: float) -> None:
        seg = self.segments[seg_id]
        if not radius > 0:
            raise ValueError("segment radius must be positive")
        seg.radius = radius

    def move_node(self, node_id: int, p) -> None:
        if node_id not in self.nodes:
            raise KeyError(f"unknown node id {node_id}")
        self.nodes[node_id] = as_point(p)
        self._arrays = None

    def copy(self) -> "VascularTree":
        dup = VascularTree()
        dup.nodes = {nid: p.copy() for nid, p in self.nodes.items()}
        dup.segments = {
            sid: Segment(s.from_node, s.to_node, s.radius, s.origin)
            for sid, s in self.segments.items()
        }
        dup.roots = list(self.roots)
        dup._next_node = self._next_node
        dup._next_segment = self._next_segment
        return dup

    # -- derived views -----------------------------------------------------

    def out_segments(self) -> dict[int, list[int]]:
        """node id -> outgoing segment ids (sorted for determinism)."""
        out: dict[int, list[int]] = {nid: [] for nid in self.nodes}
        for sid in sorted(self.segments):
            out[self.segments[sid].from_node].append(sid)
        return out

    def leaves(self) -> set[int]:
        """Nodes with no outgoing segment."""
        has_out = {s.from_node for s in self.segments.values()}
        return set(self.nodes) - has_out

    def segment_length(self, seg_id: int) -> float:
        seg = self.segments[seg_id]
        d = self.nodes[seg.to_node] - self.nodes[seg.from_node]
        return float(math.sqrt(float(d @ d)))

    def segment_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sorted segment ids, from-endpoints (N,3), to-endpoints (N,3)).

        Cached until the next structural change; shared by the nearest-
        segment kernels.
        """
        if self._arrays is None:
            ids = np.array(sorted(self.segments), dtype=np.int64)
            a = np.empty((len(ids), 3), dtype=np.float64)
            b = np.empty((len(ids), 3), dtype=np.float64)
            for row, sid in enumerate(ids):
                seg = self.segments[int(sid)]
                a[row] = self.nodes[seg.from_node]
                b[row] = self.nodes[seg.to_node]
            self._arrays = (ids, a, b)
        return self._arrays

    # -- validation --------------------------------------------------------

    def validate(self, box: DomainBox | None = None, tol: float = GEOM_TOL) -> None:
        """Raise InvalidTreeError on any invariant violation.

        Checks: forest structure (roots have no parent, every other node has
        exactly one), acyclicity, reachability from the roots, finite node
        coordinates, positive radii, and (when a box is given) containment
        within it at closed-interval tolerance `tol`.
        """
        if not self.roots:
            raise InvalidTreeError("tree has no root")
        if len(set(self.roots)) != len(self.roots):
            raise InvalidTreeError("duplicate root ids")
        for nid, p in self.nodes.items():
            if not np.all(np.isfinite(p)):
                raise InvalidTreeError(f"node {nid} has non-finite coordinates")
            if box is not None and not box.contains(p, tol=tol):
                raise InvalidTreeError(f"node {nid} at {p} lies outside the domain box")
        parents: dict[int, int] = {}
        for sid, seg in self.segments.items():
            if seg.from_node not in self.nodes or seg.to_node not in self.nodes:
                raise InvalidTreeError(f"segment {sid} references a missing node")
            if seg.to_node in parents:
                raise InvalidTreeError(
                    f"node {seg.to_node} has multiple incoming segments"
                )
            parents[seg.to_node] = sid
        for rid in self.roots:
            if rid not in self.nodes:
                raise InvalidTreeError(f"root {rid} is not a node")
            if rid in parents:
                raise InvalidTreeError(f"root {rid} has an incoming segment")
        out = self.out_segments()
        seen: set[int] = set()
        stack = list(self.roots)
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise InvalidTreeError(f"node {nid} reached twice (cycle or shared subtree)")
            seen.add(nid)
            for sid in out[nid]:
                stack.append(self.segments[sid].to_node)
        if seen != set(self.nodes):
            orphans = sorted(set(self.nodes) - seen)
            raise InvalidTreeError(f"nodes unreachable from any root: {orphans}")


# -- operations -------------------------------------------------------------


def leaf_counts_below(tree: VascularTree) -> dict[int, int]:
    """Leaf count of the subtree hanging below each node (leaf itself -> 1)."""
    out = tree.out_segments()
    counts: dict[int, int] = {}
    # Iterative post-order; trees are shallow but recursion limits are cheap
    # to avoid entirely.
    stack: list[tuple[int, bool]] = [(r, False) for r in tree.roots]
    while stack:
        nid, expanded = stack.pop()
        children = [tree.segments[sid].to_node for sid in out[nid]]
        if not children:
            counts[nid] = 1
            continue
        if expanded:
            counts[nid] = sum(counts[c] for c in children)
        else:
            stack.append((nid, True))
            stack.extend((c, False) for c in children)
    return counts


def outflow_count(tree: VascularTree, seg_id: int) -> int:
    """Number of leaf endpoints downstream of a segment's outflow node."""
    if seg_id not in tree.segments:
        raise KeyError(f"unknown segment id {seg_id}")
    return leaf_counts_below(tree)[tree.segments[seg_id].to_node]


def apply_radius_policy(tree: VascularTree, policy: RadiusPolicy) -> VascularTree:
    """Copy of the tree with every radius recomputed from its outflow count."""
    updated = tree.copy()
    _apply_radius_policy_inplace(updated, policy)
    return updated


def _apply_radius_policy_inplace(tree: VascularTree, policy: RadiusPolicy) -> None:
    counts = leaf_counts_below(tree)
    for seg in tree.segments.values():
        seg.radius = policy.radius(counts[seg.to_node])


def nearest_segment(tree: VascularTree, p) -> tuple[int, float]:
    """Segment minimizing point-to-segment distance; ties -> smallest id."""
    if not tree.segments:
        raise VeinTreeError("tree has no segments")
    ids, a, b = tree.segment_arrays()
    idx, dist = _nearest_segment_kernel(a, b, as_point(p))
    return int(ids[idx]), dist


def total_volume(tree: VascularTree) -> float:
    """Sum of straight-cylinder segment volumes, mm^3."""
    vol = 0.0
    for sid, seg in tree.segments.items():
        vol += math.pi * seg.radius * seg.radius * tree.segment_length(sid)
    return vol


# -- debug edge-list export ---------------------------------------------------


def export_edges(tree: VascularTree) -> str:
    """Plain-text edge list, one segment per line:

    seg_id from_node to_node radius x1 y1 z1 x2 y2 z2
    """
    lines = []
    for sid in sorted(tree.segments):
        seg = tree.segments[sid]
        p1 = tree.nodes[seg.from_node]
        p2 = tree.nodes[seg.to_node]
        coords = " ".join(f"{v:.17g}" for v in (*p1, *p2))
        lines.append(f"{sid} {seg.from_node} {seg.to_node} {seg.radius:.17g} {coords}")
    return "\n".join(lines) + "\n"


def import_edges(text: str) -> VascularTree:
    """Rebuild a tree from an edge-list export (roots = parentless nodes)."""
    tree = VascularTree()
    raw_nodes: dict[int, np.ndarray] = {}
    edges: list[tuple[int, int, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 10:
            raise VeinTreeError(f"edge list line {lineno}: expected 10 fields")
        _, fr, to = (int(parts[i]) for i in range(3))
        radius = float(parts[3])
        p1 = np.array([float(v) for v in parts[4:7]])
        p2 = np.array([float(v) for v in parts[7:10]])
        raw_nodes[fr] = p1
        raw_nodes[to] = p2
        edges.append((fr, to, radius))
    remap: dict[int, int] = {}
    children = {to for _, to, _ in edges}
    for old_id in sorted(raw_nodes):
        remap[old_id] = tree.add_node(raw_nodes[old_id], root=old_id not in children)
    for fr, to, radius in edges:
        tree.add_segment(remap[fr], remap[to], radius)
    tree.validate()
    return tree
