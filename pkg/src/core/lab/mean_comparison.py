"""
Mean Comparison Lab
===================

Compares the arithmetic mean of P(c|x') over sampled window fills (AM) with
the single evaluation at the window's mean fill (NGM, the normalized
geometric mean reached through a final softmax), and tracks how the AM
estimate fluctuates with the number of samples.

Case i uses the random stream ``seed + i``.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.config.logging import get_logger
from src.core.evidence.algorithms import DRAW_MEAN, DRAW_SAMPLES, fill_window, window_fills
from src.core.evidence.fillers import AnyModel, WindowFiller, make_filler
from src.core.lab.reporting import LabError
from src.core.nn.network import Network
from src.core.patches.gaussian import PatchModel
from src.models.schemas import ExplainConfig, FluctuationPoint, MeanComparison, Sampling

logger = get_logger(__name__)

Window = Tuple[int, int]

DEFAULT_REFERENCE_SAMPLES = 500


def window_config(
    model: AnyModel, samples: int = 1, seed: int = 0, batch_size: int = 160
) -> ExplainConfig:
    """Explanation settings matching a fitted model's window geometry."""
    if isinstance(model, PatchModel):
        return ExplainConfig(
            k=model.k,
            l=model.l,
            samples=samples,
            seed=seed,
            batch_size=batch_size,
            sampling=Sampling.CONDITIONAL,
        )
    return ExplainConfig(
        k=model.k, l=model.k, samples=samples, seed=seed, batch_size=batch_size
    )


def _check_window(x: np.ndarray, window: Window, k: int) -> None:
    top, left = window
    _, h, w = x.shape
    if top < 0 or left < 0 or top + k > h or left + k > w:
        raise LabError(f"window at {window} with k={k} does not fit a {h}x{w} image")


def window_probabilities(
    net: Network,
    x: np.ndarray,
    c: int,
    filler: WindowFiller,
    window: Window,
    draw: str,
    samples: int,
    seed: int,
    batch_size: int = 160,
) -> np.ndarray:
    """P(c|x') for every fill of one window, evaluated in batches."""
    fills = window_fills(filler, x, window, draw, samples, seed)
    probs = np.empty(len(fills))
    for start in range(0, len(fills), batch_size):
        block = fills[start : start + batch_size]
        images = np.stack([fill_window(x, window, filler.k, fill) for fill in block])
        probs[start : start + len(block)] = net.forward(images)[:, c]
    return probs


def _am_ngm(
    net: Network,
    x: np.ndarray,
    c: int,
    filler: WindowFiller,
    window: Window,
    samples: int,
    seed: int,
    batch_size: int,
) -> Tuple[float, float, float]:
    probs = window_probabilities(net, x, c, filler, window, DRAW_SAMPLES, samples, seed, batch_size)
    am = float(np.mean(probs))
    std_error = float(np.std(probs, ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    ngm = float(window_probabilities(net, x, c, filler, window, DRAW_MEAN, 1, seed)[0])
    return am, ngm, std_error


def am_vs_ngm(
    net: Network,
    images: Sequence[np.ndarray],
    model: AnyModel,
    window: Window,
    samples_ref: int = DEFAULT_REFERENCE_SAMPLES,
    classes: Optional[Sequence[int]] = None,
    seed: int = 0,
    batch_size: int = 160,
) -> List[MeanComparison]:
    """AM over ``samples_ref`` sampled fills vs NGM at one window, per image.

    Args:
        net: Classifier
        images: Images (C, H, W) matching the network input
        model: Fitted window model (conditional or marginal) or a filler
        window: Top-left corner of the marginalized window
        samples_ref: Samples per AM estimate
        classes: Class per image; the predicted class when omitted
        seed: Base seed; image i uses ``seed + i``

    Raises:
        LabError: On an empty case list or a window outside the image
    """
    if len(images) == 0:
        raise LabError("empty case list")
    if samples_ref < 1:
        raise LabError(f"samples_ref must be >= 1, got {samples_ref}")
    if classes is not None and len(classes) != len(images):
        raise LabError(f"{len(classes)} classes for {len(images)} images")
    filler = make_filler(model, window_config(model, samples_ref, seed, batch_size))

    results: List[MeanComparison] = []
    for i, image in enumerate(images):
        x = np.asarray(image, dtype=np.float64)
        _check_window(x, window, filler.k)
        c = net.predict(x)[0] if classes is None else int(classes[i])
        am, ngm, std_error = _am_ngm(net, x, c, filler, window, samples_ref, seed + i, batch_size)
        results.append(
            MeanComparison(
                case=f"image={i} class={c} window={window[0]}:{window[1]}",
                am=am,
                ngm=ngm,
                error=abs(am - ngm),
                std_error=std_error,
                samples=samples_ref,
            )
        )
        logger.debug("Mean comparison", case=i, am=am, ngm=ngm, error=abs(am - ngm))
    logger.info("AM vs NGM finished", cases=len(results), samples=samples_ref)
    return results


def sample_fluctuation(
    net: Network,
    x: np.ndarray,
    c: int,
    model: AnyModel,
    window: Window,
    sample_counts: Sequence[int],
    repeats: int = 10,
    seed: int = 0,
    batch_size: int = 160,
) -> List[FluctuationPoint]:
    """|AM_S - NGM| and the spread of AM_S across ``repeats`` seeds, per S.

    Repeat r uses the stream ``seed + r`` for every S.
    """
    counts = list(sample_counts)
    if not counts:
        raise LabError("empty case list")
    if any(s < 1 for s in counts) or any(b <= a for a, b in zip(counts, counts[1:])):
        raise LabError(f"sample counts must be positive and strictly ascending, got {counts}")
    if repeats < 1:
        raise LabError(f"repeats must be >= 1, got {repeats}")
    x = np.asarray(x, dtype=np.float64)
    filler = make_filler(model, window_config(model, counts[-1], seed, batch_size))
    _check_window(x, window, filler.k)
    ngm = float(window_probabilities(net, x, c, filler, window, DRAW_MEAN, 1, seed)[0])

    curve: List[FluctuationPoint] = []
    for samples in counts:
        estimates = np.array(
            [
                np.mean(
                    window_probabilities(
                        net, x, c, filler, window, DRAW_SAMPLES, samples, seed + r, batch_size
                    )
                )
                for r in range(repeats)
            ]
        )
        curve.append(
            FluctuationPoint(
                samples=samples,
                mean_abs_diff=float(np.mean(np.abs(estimates - ngm))),
                std_across_seeds=float(np.std(estimates, ddof=1)) if repeats > 1 else 0.0,
                ngm=ngm,
            )
        )
        logger.debug("Fluctuation point", samples=samples, std=curve[-1].std_across_seeds)
    return curve
