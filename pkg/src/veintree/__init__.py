"""veintree: deterministic synthetic palm-vein pattern dataset generator.

Grows 3D palm vascular trees (trunk templates + volume-minimizing branch
insertion), bends segments into curved trajectories, projects them into
depth-shaded 128x128 grayscale patterns, blends palmprint-like creases,
applies posture augmentations, and emits labeled per-identity image sets
with a manifest and GLCM-based quality statistics.
"""

__version__ = "0.1.0"

from .model import (
    DomainBox,
    InvalidTreeError,
    RadiusPolicy,
    Segment,
    VascularTree,
    VeinTreeError,
    apply_radius_policy,
    nearest_segment,
    outflow_count,
    total_volume,
)

__all__ = [
    "__version__",
    "DomainBox",
    "InvalidTreeError",
    "RadiusPolicy",
    "Segment",
    "VascularTree",
    "VeinTreeError",
    "apply_radius_policy",
    "nearest_segment",
    "outflow_count",
    "total_volume",
]
