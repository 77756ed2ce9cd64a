"""Randomized trunk construction for the four palm-vasculature families.

Each family (A: dual arteries joined by a palmar arch, B: dual arteries
without an arch, C/D: single artery entering from either side) ships as a
keypoint template digitized once into a bundled JSON file. Sampling a trunk
perturbs the template keypoints in-plane, lifts them to 3D by drawing the
depth coordinate uniformly across the palm thickness, and wires the template
edges into a radius-consistent vascular tree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    DomainBox,
    RadiusPolicy,
    VascularTree,
    VeinTreeError,
    _apply_radius_policy_inplace,
    GEOM_TOL,
    TRUNK,
)

FAMILIES = ("A", "B", "C", "D")


class TemplateError(VeinTreeError):
    """A trunk template file fails to parse or violates an invariant."""


class KeyPointRole(str, Enum):
    """Roles of palm-vasculature keypoints."""

    ROOT = "root"                          # artery inflow at the wrist
    ARCH_BIFURCATION = "arch_bifurcation"  # palmar-arch branch point
    FINGER_INFLOW = "finger_inflow"        # base of a finger artery
    FINGER_OUTFLOW = "finger_outflow"      # terminal flowing into a finger


@dataclass(frozen=True)
class TrunkKeypoint:
    label: str
    role: KeyPointRole
    x: float
    y: float
    perturb_radius: float


@dataclass(frozen=True)
class TrunkTemplate:
    """One trunk family as labeled 2D keypoints plus flow-directed edges."""

    family: str
    template_id: str
    keypoints: tuple[TrunkKeypoint, ...]
    edges: tuple[tuple[str, str], ...]

    def keypoint(self, label: str) -> TrunkKeypoint:
        for kp in self.keypoints:
            if kp.label == label:
                return kp
        raise KeyError(label)


@dataclass(frozen=True)
class TrunkInstance:
    tree: VascularTree
    family: str
    template_id: str


def _validate_template(tpl: TrunkTemplate, plane_w: float = 70.0,
                       plane_h: float = 80.0) -> None:
    if tpl.family not in FAMILIES:
        raise TemplateError(f"template {tpl.template_id}: unknown family {tpl.family!r}")
    labels = [kp.label for kp in tpl.keypoints]
    if len(set(labels)) != len(labels):
        raise TemplateError(f"template {tpl.template_id}: duplicate keypoint labels")
    if not tpl.keypoints:
        raise TemplateError(f"template {tpl.template_id}: no keypoints")
    by_label = {kp.label: kp for kp in tpl.keypoints}
    for kp in tpl.keypoints:
        if not (0.0 <= kp.x <= plane_w and 0.0 <= kp.y <= plane_h):
            raise TemplateError(
                f"template {tpl.template_id}: keypoint {kp.label} at "
                f"({kp.x}, {kp.y}) lies outside [0,{plane_w}]x[0,{plane_h}]"
            )
        if kp.perturb_radius < 0:
            raise TemplateError(
                f"template {tpl.template_id}: keypoint {kp.label} has negative perturb_radius"
            )
    incoming: dict[str, int] = {}
    outgoing: dict[str, int] = {}
    for fr, to in tpl.edges:
        for end in (fr, to):
            if end not in by_label:
                raise TemplateError(
                    f"template {tpl.template_id}: edge ({fr}->{to}) references unknown label {end!r}"
                )
        if fr == to:
            raise TemplateError(f"template {tpl.template_id}: self-loop on {fr!r}")
        incoming[to] = incoming.get(to, 0) + 1
        outgoing[fr] = outgoing.get(fr, 0) + 1
    roots = [kp for kp in tpl.keypoints if kp.role is KeyPointRole.ROOT]
    for kp in tpl.keypoints:
        n_in = incoming.get(kp.label, 0)
        if kp.role is KeyPointRole.ROOT:
            if n_in != 0:
                raise TemplateError(
                    f"template {tpl.template_id}: root {kp.label} has an incoming edge"
                )
        else:
            if n_in != 1:
                raise TemplateError(
                    f"template {tpl.template_id}: keypoint {kp.label} has "
                    f"{n_in} incoming edges (needs exactly 1)"
                )
        if kp.role is KeyPointRole.FINGER_OUTFLOW and outgoing.get(kp.label, 0) != 0:
            raise TemplateError(
                f"template {tpl.template_id}: finger outflow {kp.label} has an outgoing edge"
            )
    if tpl.family == "A":
        if len(roots) < 2:
            raise TemplateError(
                f"template {tpl.template_id}: family A needs at least 2 roots"
            )
    elif tpl.family in ("C", "D"):
        if len(roots) != 1:
            raise TemplateError(
                f"template {tpl.template_id}: family {tpl.family} needs exactly 1 root"
            )
    elif not roots:
        raise TemplateError(f"template {tpl.template_id}: no root keypoint")
    # Flow-directedness + single parenthood already imply a forest; check
    # reachability so dangling components are rejected, and (family A) that
    # every root feeds part of the palmar arch.
    adjacency: dict[str, list[str]] = {kp.label: [] for kp in tpl.keypoints}
    for fr, to in tpl.edges:
        adjacency[fr].append(to)
    reached: set[str] = set()
    for root in roots:
        component: set[str] = set()
        stack = [root.label]
        while stack:
            lbl = stack.pop()
            if lbl in component:
                raise TemplateError(f"template {tpl.template_id}: cycle through {lbl!r}")
            component.add(lbl)
            stack.extend(adjacency[lbl])
        if tpl.family == "A" and not any(
            by_label[lbl].role is KeyPointRole.ARCH_BIFURCATION for lbl in component
        ):
            raise TemplateError(
                f"template {tpl.template_id}: family A root {root.label} reaches no arch keypoint"
            )
        reached |= component
    if reached != set(labels):
        missing = sorted(set(labels) - reached)
        raise TemplateError(
            f"template {tpl.template_id}: keypoints unreachable from any root: {missing}"
        )


def _parse_template(obj: dict, index: int) -> TrunkTemplate:
    try:
        family = obj["family"]
        template_id = obj.get("id", f"template-{index}")
        kps = []
        for kp in obj["keypoints"]:
            role_raw = kp["role"]
            try:
                role = KeyPointRole(role_raw)
            except ValueError:
                raise TemplateError(
                    f"template {template_id}: unknown keypoint role {role_raw!r}"
                ) from None
            kps.append(
                TrunkKeypoint(
                    label=str(kp["label"]),
                    role=role,
                    x=float(kp["x"]),
                    y=float(kp["y"]),
                    perturb_radius=float(kp["perturb_radius"]),
                )
            )
        edges = tuple((str(e["from"]), str(e["to"])) for e in obj["edges"])
    except KeyError as exc:
        raise TemplateError(f"template #{index}: missing field {exc}") from None
    return TrunkTemplate(
        family=family,
        template_id=template_id,
        keypoints=tuple(kps),
        edges=edges,
    )


def load_templates(path: str | Path | None = None) -> list[TrunkTemplate]:
    """Load trunk templates from a JSON file (bundled defaults when None)."""
    if path is None:
        text = resources.files("veintree.data").joinpath("trunk_templates.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TemplateError(f"template file does not parse as JSON: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise TemplateError("template file must be a non-empty JSON list")
    templates = [_parse_template(obj, i) for i, obj in enumerate(raw)]
    for tpl in templates:
        _validate_template(tpl)
    return templates


def lift_keypoint(kp: tuple[float, float], box: DomainBox,
                  rng: np.random.Generator) -> np.ndarray:
    """Lift a 2D palm-plane keypoint into the 3D domain box.

    The plane x maps to 3D x, the plane y to 3D z (palm height), and the
    depth coordinate is drawn uniformly across the palm thickness.
    """
    x2d, y2d = float(kp[0]), float(kp[1])
    if not (0.0 <= x2d <= box.width and 0.0 <= y2d <= box.height):
        raise ValueError(
            f"keypoint ({x2d}, {y2d}) outside plane [0,{box.width}]x[0,{box.height}]"
        )
    y3d = box.y_lo + box.thickness * rng.random()
    return np.array([x2d, y3d, y2d])


def _perturb_in_disk(kp: TrunkKeypoint, box: DomainBox,
                     rng: np.random.Generator) -> tuple[float, float]:
    # Two draws regardless of radius keeps the stream layout fixed.
    angle = 2.0 * math.pi * rng.random()
    dist = kp.perturb_radius * math.sqrt(rng.random())
    x = min(max(kp.x + dist * math.cos(angle), 0.0), box.width)
    y = min(max(kp.y + dist * math.sin(angle), 0.0), box.height)
    return x, y


def sample_trunk(template: TrunkTemplate, box: DomainBox, policy: RadiusPolicy,
                 rng: np.random.Generator, max_attempts: int = 100) -> TrunkInstance:
    """Instantiate a trunk: perturb keypoints in-plane, lift to 3D, wire edges.

    A perturbation that collapses an edge to zero length (below geometric
    tolerance) triggers a resample of the offending keypoint, up to
    max_attempts times.
    """
    _validate_template(template, plane_w=box.width, plane_h=box.height)
    positions: dict[str, np.ndarray] = {}
    for kp in template.keypoints:
        positions[kp.label] = lift_keypoint(_perturb_in_disk(kp, box, rng), box, rng)

    def degenerate_edges() -> list[tuple[str, str]]:
        bad = []
        for fr, to in template.edges:
            d = positions[fr] - positions[to]
            if math.sqrt(float(d @ d)) < GEOM_TOL:
                bad.append((fr, to))
        return bad

    attempts = 0
    bad = degenerate_edges()
    while bad:
        attempts += 1
        if attempts > max_attempts:
            raise VeinTreeError(
                f"template {template.template_id}: could not break degenerate "
                f"edge {bad[0]} after {max_attempts} resamples"
            )
        label = bad[0][1]
        kp = template.keypoint(label)
        positions[label] = lift_keypoint(_perturb_in_disk(kp, box, rng), box, rng)
        bad = degenerate_edges()

    tree = VascularTree()
    node_ids: dict[str, int] = {}
    incoming = {to for _, to in template.edges}
    for kp in template.keypoints:
        node_ids[kp.label] = tree.add_node(
            positions[kp.label], root=kp.label not in incoming
        )
    for fr, to in template.edges:
        tree.add_segment(node_ids[fr], node_ids[to], policy.r0, origin=TRUNK)
    _apply_radius_policy_inplace(tree, policy)
    tree.validate(box)
    return TrunkInstance(tree=tree, family=template.family,
                         template_id=template.template_id)
