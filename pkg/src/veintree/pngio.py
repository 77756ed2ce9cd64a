"""Single-channel 8-bit PNG round-tripping."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def save_png(path: str | Path, image: np.ndarray) -> None:
    """Write a (H, W) uint8 array as an 8-bit grayscale PNG, no alpha."""
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("expected a 2D uint8 image")
    Image.fromarray(image, mode="L").save(str(path), format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    """Read any image file to a (H, W) uint8 grayscale array."""
    with Image.open(str(path)) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)
