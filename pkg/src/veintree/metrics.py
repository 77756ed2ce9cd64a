"""GLCM texture statistics and covariance confidence ellipses.

Quality evaluation compares pattern sets through second-order texture
features: each image yields a gray-level co-occurrence matrix per pixel
offset, reduced to scalar features (contrast, correlation, energy,
homogeneity), and a directory of images becomes a 2D feature cloud
summarized by a confidence ellipse. Two directories are compared by how
much of each cloud falls inside the other's ellipse.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import VeinTreeError
from .pngio import load_png

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GlcmSpec:
    """Levels (uniform quantization of [0, 255]), pixel offsets, symmetry."""

    levels: int = 16
    offsets: tuple[tuple[int, int], ...] = ((1, 0), (0, 1))
    symmetric: bool = True
    normalized: bool = True

    def __post_init__(self) -> None:
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if not self.offsets or any(dx == 0 and dy == 0 for dx, dy in self.offsets):
            raise ValueError("offsets must be non-empty and non-zero")


@dataclass(frozen=True)
class GlcmFeatures:
    contrast: float
    correlation: float
    energy: float
    homogeneity: float

    def as_dict(self) -> dict[str, float]:
        return {
            "contrast": self.contrast,
            "correlation": self.correlation,
            "energy": self.energy,
            "homogeneity": self.homogeneity,
        }


@dataclass(frozen=True)
class ConfidenceEllipse:
    """Level set of a 2D Gaussian fit: center, semi-axes (major first), angle."""

    center: np.ndarray
    semi_axes: np.ndarray
    angle: float
    level: float
    cov: np.ndarray

    def mahalanobis_sq(self, points: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(points) - self.center
        inv = np.linalg.inv(self.cov)
        return np.einsum("ni,ij,nj->n", d, inv, d)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.mahalanobis_sq(points) <= chi2_quantile_2dof(self.level)


def chi2_quantile_2dof(level: float) -> float:
    """Chi-squared quantile with 2 degrees of freedom: -2 ln(1 - level)."""
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    return -2.0 * math.log(1.0 - level)


def quantize(image: np.ndarray, levels: int) -> np.ndarray:
    """Uniformly bin uint8 values into `levels` classes."""
    return (image.astype(np.int64) * levels) // 256


def glcm(image: np.ndarray, spec: GlcmSpec) -> list[np.ndarray]:
    """Co-occurrence matrix per offset.

    Offset (dx, dy) pairs pixel (r, c) with (r + dy, c + dx). Symmetric
    matrices accumulate both directions (M + M^T); normalized matrices are
    scaled so all entries sum to 1.
    """
    if image.ndim != 2:
        raise ValueError("expected a 2D image")
    h, w = image.shape
    q = quantize(image, spec.levels)
    mats = []
    for dx, dy in spec.offsets:
        if abs(dy) >= h or abs(dx) >= w:
            raise ValueError(f"image {h}x{w} smaller than offset ({dx}, {dy})")
        r0 = max(0, -dy)
        r1 = h - max(0, dy)
        c0 = max(0, -dx)
        c1 = w - max(0, dx)
        src = q[r0:r1, c0:c1]
        dst = q[r0 + dy : r1 + dy, c0 + dx : c1 + dx]
        pairs = src.ravel() * spec.levels + dst.ravel()
        counts = np.bincount(pairs, minlength=spec.levels * spec.levels).reshape(
            spec.levels, spec.levels
        )
        mat = counts.astype(np.float64)
        if spec.symmetric:
            mat = mat + mat.T
        if spec.normalized:
            total = mat.sum()
            if total > 0:
                mat = mat / total
        mats.append(mat)
    return mats


def glcm_features(mats: list[np.ndarray]) -> GlcmFeatures:
    """Standard scalar features of normalized GLCMs, averaged over offsets."""
    contrast = correlation = energy = homogeneity = 0.0
    for p in mats:
        n = p.shape[0]
        i = np.arange(n, dtype=np.float64)
        diff = i[:, None] - i[None, :]
        contrast += float((p * diff * diff).sum())
        energy += float((p * p).sum())
        homogeneity += float((p / (1.0 + diff * diff)).sum())
        px = p.sum(axis=1)
        py = p.sum(axis=0)
        mu_x = float((i * px).sum())
        mu_y = float((i * py).sum())
        var_x = float(((i - mu_x) ** 2 * px).sum())
        var_y = float(((i - mu_y) ** 2 * py).sum())
        if var_x <= 0 or var_y <= 0:
            log.debug("degenerate GLCM marginals; correlation set to 0")
            corr = 0.0
        else:
            cov = float((p * (i[:, None] - mu_x) * (i[None, :] - mu_y)).sum())
            corr = cov / math.sqrt(var_x * var_y)
        correlation += corr
    k = len(mats)
    return GlcmFeatures(
        contrast=contrast / k,
        correlation=correlation / k,
        energy=energy / k,
        homogeneity=homogeneity / k,
    )


def confidence_ellipse(points: np.ndarray, level: float = 0.95) -> ConfidenceEllipse:
    """Covariance confidence ellipse of a 2D point cloud.

    Center is the sample mean; axis directions and lengths come from the
    eigendecomposition of the sample covariance, with semi-axis k equal to
    sqrt(chi2_2(level) * lambda_k). Needs >= 3 non-collinear points.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 two-dimensional points")
    center = pts.mean(axis=0)
    cov = np.cov(pts, rowvar=False, ddof=1)
    lam, vec = np.linalg.eigh(cov)
    scale = max(float(lam[1]), 1.0)
    if lam[0] <= 1e-12 * scale:
        raise VeinTreeError("degenerate (collinear) point cloud; no ellipse")
    k = chi2_quantile_2dof(level)
    major = vec[:, 1]
    angle = math.atan2(major[1], major[0]) % math.pi
    semi_axes = np.array([math.sqrt(k * lam[1]), math.sqrt(k * lam[0])])
    return ConfidenceEllipse(
        center=center, semi_axes=semi_axes, angle=angle, level=level, cov=cov
    )


def image_features(image: np.ndarray, spec: GlcmSpec) -> GlcmFeatures:
    return glcm_features(glcm(image, spec))


def _directory_cloud(
    directory: Path, spec: GlcmSpec, feature_pair: tuple[str, str]
) -> tuple[np.ndarray, int]:
    points = []
    skipped = 0
    for path in sorted(directory.rglob("*.png")):
        try:
            feats = image_features(load_png(path), spec).as_dict()
        except Exception as exc:  # noqa: BLE001 - skip-and-count contract
            log.warning("skipping unreadable image %s: %s", path, exc)
            skipped += 1
            continue
        points.append([feats[feature_pair[0]], feats[feature_pair[1]]])
    return np.asarray(points, dtype=np.float64).reshape(-1, 2), skipped


def directory_stats(
    dir_a: str | Path,
    dir_b: str | Path,
    spec: GlcmSpec | None = None,
    level: float = 0.95,
    feature_pair: tuple[str, str] = ("contrast", "correlation"),
) -> dict:
    """Compare the texture-feature clouds of two image directories.

    Returns a JSON-ready report with per-directory cloud summaries and the
    cross-containment fractions (share of each cloud inside the other's
    confidence ellipse). FID and Wang17 need external pretrained models and
    are deliberately absent; the report says so.
    """
    spec = spec or GlcmSpec()
    dirs = []
    clouds = []
    for directory in (Path(dir_a), Path(dir_b)):
        cloud, skipped = _directory_cloud(directory, spec, feature_pair)
        if len(cloud) < 3:
            raise VeinTreeError(
                f"{directory}: need at least 3 readable PNGs, found {len(cloud)}"
            )
        ellipse = confidence_ellipse(cloud, level)
        clouds.append((cloud, ellipse))
        dirs.append(
            {
                "path": str(directory),
                "n": int(len(cloud)),
                "skipped": int(skipped),
                "mean": [float(v) for v in ellipse.center],
                "cov": [[float(v) for v in row] for row in ellipse.cov],
                "ellipse": {
                    "center": [float(v) for v in ellipse.center],
                    "semi_axes": [float(v) for v in ellipse.semi_axes],
                    "angle": float(ellipse.angle),
                    "level": float(level),
                },
            }
        )
    (cloud_a, ell_a), (cloud_b, ell_b) = clouds
    return {
        "spec": {
            "levels": spec.levels,
            "offsets": [list(o) for o in spec.offsets],
            "symmetric": spec.symmetric,
            "normalized": spec.normalized,
            "feature_pair": list(feature_pair),
        },
        "dirs": dirs,
        "overlap": {
            "a_in_b": float(np.mean(ell_b.contains(cloud_a))),
            "b_in_a": float(np.mean(ell_a.contains(cloud_b))),
        },
        "excluded_metrics": ["FID", "Wang17"],
    }
