"""
Input Images and Transforms
===========================

Loading explanation inputs (image files via Pillow or MNIST IDX entries) and
the rotate / flip / crop transforms applied before explaining.
"""

from typing import Optional
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.nn.datasets import DatasetFormatError
from src.models.schemas import Transform, TransformKind

_ROTATIONS = {TransformKind.ROT90: 1, TransformKind.ROT180: 2, TransformKind.ROT270: 3}


def read_input_image(path: Path, channels: int) -> np.ndarray:
    """Image file as (C, H, W) float64 in [0, 1], converted to ``channels``."""
    if channels not in (1, 3):
        raise ValueError(f"only 1 or 3 channel inputs can be read from files, got {channels}")
    try:
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("L" if channels == 1 else "RGB"), dtype=np.float64)
    except (OSError, UnidentifiedImageError) as e:
        raise DatasetFormatError(f"cannot read image: {e}", Path(path), 0) from e
    pixels = pixels / 255.0
    if channels == 1:
        return pixels[None]
    return pixels.transpose(2, 0, 1).copy()


def apply_transform(x: np.ndarray, transform: Transform, fill: float = 0.0) -> np.ndarray:
    """Apply ``transform`` to a (C, H, W) image.

    Rotations are counter-clockwise. ``crop(x, y, w, h)`` keeps the rectangle
    (clipped to the image) and centres it on a canvas of the original size
    filled with ``fill``.
    """
    kind = transform.kind
    if kind == TransformKind.NONE:
        return x.copy()
    if kind in _ROTATIONS:
        return np.ascontiguousarray(np.rot90(x, _ROTATIONS[kind], axes=(1, 2)))
    if kind == TransformKind.FLIPH:
        return np.ascontiguousarray(x[:, :, ::-1])

    assert transform.crop is not None
    left, top, width, height = transform.crop
    _, h, w = x.shape
    region = x[:, top : min(top + height, h), left : min(left + width, w)]
    if region.size == 0:
        raise ValueError(f"crop {transform.crop} lies outside the {w}x{h} image")
    canvas = np.full_like(x, fill)
    rh, rw = region.shape[1:]
    oy, ox = (h - rh) // 2, (w - rw) // 2
    canvas[:, oy : oy + rh, ox : ox + rw] = region
    return canvas


def mean_pixel(images: Optional[np.ndarray]) -> float:
    """Dataset mean pixel used to pad crops; 0 without a dataset."""
    if images is None or np.asarray(images).size == 0:
        return 0.0
    return float(np.mean(images))
