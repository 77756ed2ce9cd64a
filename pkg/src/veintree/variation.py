"""Intra-class sample diversification.

Posture is simulated on the pattern image by a fixed pipeline of small
geometric perturbations (scale, rotate, elastic distortion, crop jitter,
resize back), all resampled bilinearly against a white background. Style
diversity for a downstream image-to-image model is controlled by noise
vectors pinned at an exact L2 distance from a shared anchor; they are
emitted to a small binary file, never consumed here.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .model import VeinTreeError

_NOISE_MAGIC = b"PVNZ"


@dataclass(frozen=True)
class AugmentParams:
    """Ranges for the posture pipeline; all small enough to keep identity."""

    scale: tuple[float, float] = (0.95, 1.05)
    rotate: tuple[float, float] = (-4.0, 4.0)
    distort_amplitude: float = 2.5
    distort_smooth: float = 8.0
    crop_jitter: tuple[int, int] = (0, 4)

    def __post_init__(self) -> None:
        if self.scale[0] > self.scale[1] or self.scale[0] <= 0:
            raise ValueError("scale range is empty or non-positive")
        if self.rotate[0] > self.rotate[1]:
            raise ValueError("rotate range is empty")
        if self.distort_amplitude < 0 or self.distort_smooth <= 0:
            raise ValueError("distortion amplitude must be >= 0, smoothing > 0")
        if self.crop_jitter[0] > self.crop_jitter[1] or self.crop_jitter[0] < 0:
            raise ValueError("crop_jitter range is empty or negative")


@dataclass(frozen=True)
class NoiseSpec:
    """Constrained-noise batch: dimension, count, anchor distance."""

    dim: int = 512
    n_samples: int = 7
    l2_dist: float = 0.5

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        if self.l2_dist < 0:
            raise ValueError("l2_dist must be >= 0")


@dataclass(frozen=True)
class ConstrainedNoise:
    """Anchor vector plus samples, each exactly l2_dist from the anchor."""

    anchor: np.ndarray
    samples: np.ndarray


def _bilinear(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return ndimage.map_coordinates(
        image, [rows, cols], order=1, mode="constant", cval=255.0, prefilter=False
    )


def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )


def augment(
    image: np.ndarray, params: AugmentParams, rng: np.random.Generator
) -> np.ndarray:
    """Posture pipeline: scale, rotate, elastic distortion, crop jitter.

    Bilinear resampling with white fill at every stage; output keeps the
    input size and dtype. Positive rotation turns content counterclockwise
    when the image is viewed with the row axis pointing down.
    """
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("expected a 2D uint8 image")
    h, w = image.shape
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    img = image.astype(np.float64)

    # The draw layout is fixed (scale, rotate, field, jitter) so the stream
    # advances identically whatever the parameter ranges are.
    s = params.scale[0] + (params.scale[1] - params.scale[0]) * rng.random()
    theta = np.deg2rad(
        params.rotate[0] + (params.rotate[1] - params.rotate[0]) * rng.random()
    )
    field = rng.uniform(-1.0, 1.0, size=(2, h, w))
    jitter = rng.integers(params.crop_jitter[0], params.crop_jitter[1] + 1, size=4)

    rows, cols = _grid(h, w)

    # Scale about the center: output pixel samples input at c + (p - c)/s.
    r_in = cr + (rows - cr) / s
    c_in = cc + (cols - cc) / s
    img = _bilinear(img, r_in, c_in)

    # Rotate content by +theta: sample input along the -theta rotation.
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    dr = rows - cr
    dc = cols - cc
    r_in = cr + cos_t * dr + sin_t * dc
    c_in = cc - sin_t * dr + cos_t * dc
    img = _bilinear(img, r_in, c_in)

    # Elastic distortion: smooth a uniform field, normalize its peak
    # displacement magnitude to the configured amplitude.
    if params.distort_amplitude > 0:
        dy = ndimage.gaussian_filter(field[0], params.distort_smooth, mode="reflect")
        dx = ndimage.gaussian_filter(field[1], params.distort_smooth, mode="reflect")
        peak = float(np.sqrt(dy * dy + dx * dx).max())
        if peak > 0:
            scale = params.distort_amplitude / peak
            img = _bilinear(img, rows + dy * scale, cols + dx * scale)

    # Crop jitter: trim each edge independently, stretch back to full size.
    top, bottom, left, right = (int(v) for v in jitter)
    crop_h = h - top - bottom
    crop_w = w - left - right
    if crop_h < 2 or crop_w < 2:
        raise ValueError("crop_jitter leaves no image")
    r_in = top + (rows + 0.5) * (crop_h / h) - 0.5
    c_in = left + (cols + 0.5) * (crop_w / w) - 0.5
    img = _bilinear(img, r_in, c_in)

    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def sample_constrained_noise(
    spec: NoiseSpec, rng: np.random.Generator
) -> ConstrainedNoise:
    """Gaussian anchor plus samples on the radius-l2_dist sphere around it."""
    anchor = rng.standard_normal(spec.dim)
    samples = np.empty((spec.n_samples, spec.dim), dtype=np.float64)
    for i in range(spec.n_samples):
        u = rng.standard_normal(spec.dim)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            u = np.zeros(spec.dim)
            u[0] = 1.0
            norm = 1.0
        samples[i] = anchor + spec.l2_dist * (u / norm)
    return ConstrainedNoise(anchor=anchor, samples=samples)


def write_noise_file(path: str | Path, noise: ConstrainedNoise, spec: NoiseSpec) -> None:
    """Binary noise export plus a JSON sidecar describing the spec.

    Layout: 16-byte header (magic PVNZ, u32 dim, u32 count, u32 reserved),
    then count x dim little-endian float32 records.
    """
    path = Path(path)
    count, dim = noise.samples.shape
    header = _NOISE_MAGIC + struct.pack("<III", dim, count, 0)
    path.write_bytes(header + noise.samples.astype("<f4").tobytes())
    sidecar = {"dim": spec.dim, "n_samples": spec.n_samples, "l2_dist": spec.l2_dist}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_noise_file(path: str | Path) -> np.ndarray:
    """Read a noise export back as a (count, dim) float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != _NOISE_MAGIC:
        raise VeinTreeError(f"{path}: not a noise file (bad magic)")
    dim, count, _ = struct.unpack("<III", raw[4:16])
    expected = 16 + 4 * dim * count
    if len(raw) != expected:
        raise VeinTreeError(f"{path}: truncated noise file")
    return np.frombuffer(raw, dtype="<f4", offset=16).reshape(count, dim)
