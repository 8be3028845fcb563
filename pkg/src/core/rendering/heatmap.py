"""
Heatmaps
========

Red/blue rendering of evidence maps. Values are normalized by the largest
absolute value, v = value / max|value| in [-1, 1]:

- v > 0: white towards red,  R = 255, G = B = round(255 * (1 - v))
- v < 0: white towards blue, B = 255, R = G = round(255 * (1 + v))
- v = 0: white

Rounding is half-up throughout.
"""

from dataclasses import dataclass

import numpy as np

from src.core.evidence.maps import EvidenceMap


class RenderError(Exception):
    """Exception raised when an image cannot be rendered or written."""

    pass


@dataclass
class HeatmapImage:
    """RGB8 image stored row-major as (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.shape != (self.height, self.width, 3):
            raise RenderError(
                f"pixel buffer {self.pixels.shape} does not match {self.width}x{self.height} RGB"
            )

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "HeatmapImage":
        return cls(width=int(pixels.shape[1]), height=int(pixels.shape[0]), pixels=pixels)

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()


def round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def normalized_values(evidence: EvidenceMap) -> np.ndarray:
    """we / counts scaled into [-1, 1]; an all-zero map stays zero."""
    values = evidence.values()
    if not np.all(np.isfinite(values)):
        raise RenderError("evidence map contains non-finite values")
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return np.zeros_like(values)
    return values / peak


def colorize(v: np.ndarray) -> np.ndarray:
    """Map normalized values in [-1, 1] to RGB8."""
    fade = round_half_up(255.0 * (1.0 - np.abs(v))).astype(np.uint8)
    full = np.full(v.shape, 255, dtype=np.uint8)
    red = np.where(v < 0, fade, full)
    blue = np.where(v > 0, fade, full)
    return np.stack([red, fade, blue], axis=-1)


def render_heatmap(evidence: EvidenceMap) -> HeatmapImage:
    return HeatmapImage.from_array(colorize(normalized_values(evidence)))


def grayscale_rgb(image: np.ndarray) -> HeatmapImage:
    """(C, H, W) or (H, W) image in [0, 1] as gray RGB8 (channel mean)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        image = image.mean(axis=0)
    if image.ndim != 2:
        raise RenderError(f"expected a (C, H, W) or (H, W) image, got {image.shape}")
    if not np.all(np.isfinite(image)):
        raise RenderError("image contains non-finite values")
    gray = round_half_up(255.0 * np.clip(image, 0.0, 1.0)).astype(np.uint8)
    return HeatmapImage.from_array(np.repeat(gray[:, :, None], 3, axis=2))


def overlay(evidence: EvidenceMap, image: np.ndarray, alpha: float = 0.5) -> HeatmapImage:
    """Per-pixel blend round(alpha * heatmap + (1 - alpha) * gray input).

    Raises:
        RenderError: On a size mismatch or alpha outside [0, 1]
    """
    if not 0.0 <= alpha <= 1.0:
        raise RenderError(f"alpha must lie in [0, 1], got {alpha}")
    heat = render_heatmap(evidence)
    gray = grayscale_rgb(image)
    if (heat.width, heat.height) != (gray.width, gray.height):
        raise RenderError(
            f"map is {heat.width}x{heat.height} but image is {gray.width}x{gray.height}"
        )
    blend = alpha * heat.pixels.astype(np.float64) + (1.0 - alpha) * gray.pixels.astype(np.float64)
    return HeatmapImage.from_array(round_half_up(blend).astype(np.uint8))
