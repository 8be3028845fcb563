"""
PPM Files
=========

Binary P6 images, maxval 255, no comments, single newline separators:
``P6\\n<width> <height>\\n255\\n`` followed by the RGB bytes.
"""

from pathlib import Path

import numpy as np

from src.config.logging import get_logger
from src.core.rendering.heatmap import HeatmapImage, RenderError

logger = get_logger(__name__)

SUPPORTED_FORMATS = ("ppm",)


def encode_ppm(img: HeatmapImage) -> bytes:
    return f"P6\n{img.width} {img.height}\n255\n".encode("ascii") + img.to_bytes()


def write_image(img: HeatmapImage, path: Path, fmt: str = "ppm") -> Path:
    """Write ``img``; I/O failures are raised as RenderError."""
    if fmt not in SUPPORTED_FORMATS:
        raise RenderError(f"unsupported image format {fmt!r}")
    path = Path(path)
    try:
        path.write_bytes(encode_ppm(img))
    except OSError as e:
        raise RenderError(f"cannot write {path}: {e}") from e
    logger.debug("Image written", path=str(path), width=img.width, height=img.height)
    return path


def decode_ppm(data: bytes) -> HeatmapImage:
    """Parse a P6 payload (whitespace-separated header, optional comments)."""
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RenderError("truncated PPM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster

    if fields[0] != b"P6":
        raise RenderError(f"not a binary PPM (magic {fields[0]!r})")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as e:
        raise RenderError(f"malformed PPM header: {e}") from e
    if maxval != 255:
        raise RenderError(f"only maxval 255 is supported, got {maxval}")
    raster = data[pos:]
    if len(raster) != 3 * width * height:
        raise RenderError(f"expected {3 * width * height} pixel bytes, got {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return HeatmapImage(width=width, height=height, pixels=pixels.copy())


def read_ppm(path: Path) -> HeatmapImage:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise RenderError(f"cannot read {path}: {e}") from e
    return decode_ppm(data)
