"""
Panels
======

Pillow-backed PNG export and figure-style panels: one row per explained
image with [input | heatmap | overlay] tiles, upscaled with nearest
neighbour on a white background.
"""

from typing import Sequence
from pathlib import Path

import numpy as np
from PIL import Image

from src.config.logging import get_logger
from src.core.rendering.heatmap import HeatmapImage, RenderError
from src.core.rendering.ppm import write_image

logger = get_logger(__name__)


def to_pil(img: HeatmapImage) -> Image.Image:
    return Image.fromarray(img.pixels)


def write_png(img: HeatmapImage, path: Path) -> Path:
    path = Path(path)
    try:
        to_pil(img).save(path, format="PNG")
    except OSError as e:
        raise RenderError(f"cannot write {path}: {e}") from e
    return path


def compose_panel(
    rows: Sequence[Sequence[HeatmapImage]], path: Path, scale: int = 4, gap: int = 2
) -> HeatmapImage:
    """Tile ``rows`` into one image and save it (PPM by extension, PNG otherwise)."""
    if not rows or not all(rows):
        raise RenderError("panel needs at least one non-empty row")
    if scale < 1 or gap < 0:
        raise RenderError(f"invalid scale {scale} or gap {gap}")
    tile_w = max(img.width for row in rows for img in row) * scale
    tile_h = max(img.height for row in rows for img in row) * scale
    columns = max(len(row) for row in rows)
    canvas = Image.new(
        "RGB",
        (columns * tile_w + (columns + 1) * gap, len(rows) * tile_h + (len(rows) + 1) * gap),
        "white",
    )
    for r, row in enumerate(rows):
        for c, img in enumerate(row):
            size = (img.width * scale, img.height * scale)
            tile = to_pil(img).resize(size, Image.Resampling.NEAREST)
            canvas.paste(tile, (gap + c * (tile_w + gap), gap + r * (tile_h + gap)))

    panel = HeatmapImage.from_array(np.asarray(canvas, dtype=np.uint8))
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        write_image(panel, path)
    else:
        write_png(panel, path)
    logger.info("Panel written", path=str(path), rows=len(rows), columns=columns)
    return panel
