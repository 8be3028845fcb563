"""
Forward-Pass Accounting
=======================

Closed-form pass counts per method. Counts are single-image evaluations and
exclude the one reference pass computing P(c|x), which every method shares.
"""

from typing import Tuple, Union

from src.models.schemas import ExplainConfig, Method

ImageSize = Union[int, Tuple[int, int]]


def window_count(image_size: ImageSize, k: int, placement: str = "valid") -> int:
    """Number of window placements.

    ``valid`` counts stride-1 windows lying inside the image, which is what the
    algorithms evaluate. ``full`` counts one placement per pixel, the
    convention used for ILSVRC-scale cost estimates (224 x 224 x 10 samples).
    """
    h, w = (image_size, image_size) if isinstance(image_size, int) else image_size
    if placement == "full":
        return h * w
    if placement != "valid":
        raise ValueError(f"placement must be 'valid' or 'full', got {placement!r}")
    if k > min(h, w):
        return 0
    return (h - k + 1) * (w - k + 1)


def count_forward_passes(
    method: Union[Method, str],
    config: ExplainConfig,
    image_size: ImageSize,
    placement: str = "valid",
) -> int:
    """Single-image forward passes a method performs.

    original: S per window; efficient and sampled_mean: one per window;
    gradient and saliency: one.
    """
    method = Method(method)
    if method in (Method.GRADIENT, Method.SALIENCY):
        return 1
    windows = window_count(image_size, config.k, placement)
    if method == Method.ORIGINAL:
        return config.samples * windows
    return windows


def count_backward_passes(method: Union[Method, str]) -> int:
    return 1 if Method(method) in (Method.GRADIENT, Method.SALIENCY) else 0


def count_batches(passes: int, batch_size: int) -> int:
    """Batches of at most ``batch_size`` images needed for ``passes`` evaluations."""
    return -(-passes // batch_size)
