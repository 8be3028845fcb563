"""
Attribution Algorithms
======================

Prediction difference analysis and its faster relatives. Every method walks
the stride-1 k x k windows of an image in row-major order and produces an
EvidenceMap:

- original:     average P(c|x') over S sampled window fills (arithmetic mean)
- efficient:    one forward pass with the window replaced by its mean
- sampled_mean: one forward pass with the window replaced by the empirical
                mean of S samples
- gradient:     first-order estimate grad^T (x - x') from a single backward pass
- saliency:     |dP(c|x)/dx| summed over channels

Window evaluations may run on a worker pool; per-window random streams use
seed + window index and the accumulation into WE is always row-major.
"""

from typing import Callable, List, Optional, Sequence, Tuple
import time

import numpy as np

from src.config.logging import get_logger
from src.core.evidence.executor import WindowExecutor
from src.core.evidence.fillers import AnyModel, WindowFiller, make_filler
from src.core.evidence.maps import (
    EvidenceError,
    EvidenceMap,
    Window,
    window_counts,
    window_positions,
)
from src.core.evidence.odds import weight_of_evidence
from src.core.nn.architectures import make_rng
from src.core.nn.network import Network
from src.models.schemas import ExplainConfig, Method

logger = get_logger(__name__)

# draw modes for window fills
DRAW_SAMPLES = "samples"
DRAW_MEAN = "mean"
DRAW_SAMPLED_MEAN = "sampled_mean"


def _check_input(net: Network, x: np.ndarray, c: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape != net.input_shape:
        raise EvidenceError(f"image shape {x.shape} does not match network input {net.input_shape}")
    if not 0 <= c < net.class_count:
        raise EvidenceError(f"class index {c} out of range [0, {net.class_count})")
    return x


def window_fills(
    filler: WindowFiller,
    x: np.ndarray,
    window: Window,
    draw: str,
    samples: int,
    seed: int,
) -> np.ndarray:
    """Replacement stack (n, C, k, k) for one window."""
    top, left = window
    if draw == DRAW_MEAN:
        return filler.mean(x, top, left)[None]
    draws = filler.samples(x, top, left, make_rng(seed), samples)
    if draw == DRAW_SAMPLED_MEAN:
        return draws.mean(axis=0)[None]
    return draws


def fill_window(x: np.ndarray, window: Window, k: int, fill: np.ndarray) -> np.ndarray:
    top, left = window
    out = x.copy()
    out[:, top : top + k, left : left + k] = fill
    return out


class _BatchedEvaluator:
    """Streams modified images through the network in batches of m."""

    def __init__(self, net: Network, c: int, batch_size: int, owners: int) -> None:
        self.net = net
        self.c = c
        self.batch_size = batch_size
        self.images: List[np.ndarray] = []
        self.owners: List[int] = []
        self.probs: List[List[float]] = [[] for _ in range(owners)]
        self.passes = 0

    def add(self, owner: int, image: np.ndarray) -> None:
        self.images.append(image)
        self.owners.append(owner)
        if len(self.images) == self.batch_size:
            self.flush()

    def flush(self) -> None:
        if not self.images:
            return
        out = self.net.forward(np.stack(self.images))[:, self.c]
        for owner, p in zip(self.owners, out):
            self.probs[owner].append(float(p))
        self.passes += len(self.images)
        self.images.clear()
        self.owners.clear()


def marginalized_probabilities(
    net: Network,
    x: np.ndarray,
    c: int,
    filler: WindowFiller,
    windows: Sequence[Window],
    config: ExplainConfig,
    draw: str,
) -> Tuple[np.ndarray, int]:
    """Estimate P(c | x without x_w) for each window.

    Returns:
        Per-window probabilities (in window order) and the number of
        single-image forward passes spent.
    """
    positions = {w: i for i, w in enumerate(window_positions(x.shape[1], x.shape[2], config.k))}
    passes: List[int] = []

    def work(start: int, chunk: Sequence[Window]) -> List[float]:
        evaluator = _BatchedEvaluator(net, c, config.batch_size, len(chunk))
        for j, window in enumerate(chunk):
            seed = config.seed + positions.get(window, start + j)
            for fill in window_fills(filler, x, window, draw, config.samples, seed):
                evaluator.add(j, fill_window(x, window, config.k, fill))
        evaluator.flush()
        passes.append(evaluator.passes)
        return [float(np.mean(p)) for p in evaluator.probs]

    estimates = WindowExecutor(config.threads).map_chunks(list(windows), work)
    return np.asarray(estimates, dtype=np.float64), int(sum(passes))


def _accumulate(
    shape: Tuple[int, int], windows: Sequence[Window], k: int, deltas: Sequence[float]
) -> np.ndarray:
    we = np.zeros(shape, dtype=np.float64)
    for (top, left), delta in zip(windows, deltas):
        we[top : top + k, left : left + k] += delta
    return we


def _reference_probability(net: Network, x: np.ndarray, c: int) -> float:
    return float(net.forward(x[None])[0, c])


def _seeded(config: ExplainConfig, rng: Optional[np.random.Generator]) -> ExplainConfig:
    """Config whose base seed is drawn from ``rng`` when one is given."""
    if rng is None:
        return config
    return config.model_copy(update={"seed": int(rng.integers(0, 2**32))})


def _matching_filler(model: AnyModel, config: ExplainConfig, x: np.ndarray) -> WindowFiller:
    filler = make_filler(model, config)
    if filler.channels != x.shape[0]:
        raise EvidenceError(f"window model has {filler.channels} channels, image has {x.shape[0]}")
    return filler


def _prediction_difference(
    net: Network,
    x: np.ndarray,
    c: int,
    model: AnyModel,
    config: ExplainConfig,
    draw: str,
    method: Method,
) -> EvidenceMap:
    x = _check_input(net, x, c)
    filler = _matching_filler(model, config, x)
    _, h, w = x.shape
    windows = window_positions(h, w, config.k)
    log = logger.bind(method=method.value, windows=len(windows), threads=config.threads)
    started = time.perf_counter()

    p_full = _reference_probability(net, x, c)
    p_marg, passes = marginalized_probabilities(net, x, c, filler, windows, config, draw)
    deltas = weight_of_evidence(p_full, p_marg, config.eps)
    evidence = EvidenceMap(
        we=_accumulate((h, w), windows, config.k, np.atleast_1d(deltas)),
        counts=window_counts(h, w, config.k),
        class_index=c,
        method=method.value,
        config=config.header(),
        forward_passes=passes,
    )
    log.info(
        "Evidence computed",
        p_full=p_full,
        forward_passes=passes,
        elapsed_ms=round(1000.0 * (time.perf_counter() - started), 3),
    )
    return evidence


def pda_original(
    net: Network,
    x: np.ndarray,
    c: int,
    model: AnyModel,
    config: ExplainConfig,
    rng: Optional[np.random.Generator] = None,
) -> EvidenceMap:
    """Sampling-based prediction difference analysis.

    For every window, S fills are drawn (stream ``config.seed + window index``),
    P(c|x') is averaged over them, and the log-odds difference to P(c|x) is
    added to every covered pixel. When ``rng`` is given the base seed is drawn
    from it instead.
    """
    return _prediction_difference(
        net, x, c, model, _seeded(config, rng), DRAW_SAMPLES, Method.ORIGINAL
    )


def pda_efficient(
    net: Network, x: np.ndarray, c: int, model: AnyModel, config: ExplainConfig
) -> EvidenceMap:
    """Replace each window by its mean; one forward pass per window, no sampling."""
    return _prediction_difference(net, x, c, model, config, DRAW_MEAN, Method.EFFICIENT)


def pda_sampled_mean(
    net: Network,
    x: np.ndarray,
    c: int,
    model: AnyModel,
    config: ExplainConfig,
    rng: Optional[np.random.Generator] = None,
) -> EvidenceMap:
    """Efficient variant fed with the empirical mean of S samples instead of the exact mean."""
    return _prediction_difference(
        net, x, c, model, _seeded(config, rng), DRAW_SAMPLED_MEAN, Method.SAMPLED_MEAN
    )


def window_gradient_terms(
    grad: np.ndarray,
    x: np.ndarray,
    filler: WindowFiller,
    windows: Sequence[Window],
    k: int,
    threads: int = 1,
) -> List[float]:
    """grad^T (x - x') per window, x' being x with the window set to its mean."""

    def work(start: int, chunk: Sequence[Window]) -> List[float]:
        terms = []
        for top, left in chunk:
            diff = x[:, top : top + k, left : left + k] - filler.mean(x, top, left)
            terms.append(float(np.sum(grad[:, top : top + k, left : left + k] * diff)))
        return terms

    return WindowExecutor(threads).map_chunks(list(windows), work)


def pda_gradient(
    net: Network, x: np.ndarray, c: int, model: AnyModel, config: ExplainConfig
) -> EvidenceMap:
    """First-order simplification: one forward and one backward pass in total.

    Accumulates probability-scale differences, not log-odds.
    """
    x = _check_input(net, x, c)
    filler = _matching_filler(model, config, x)
    _, h, w = x.shape
    windows = window_positions(h, w, config.k)
    grad = net.input_gradient(x, c)
    terms = window_gradient_terms(grad, x, filler, windows, config.k, config.threads)
    logger.info("Evidence computed", method=Method.GRADIENT.value, windows=len(windows))
    return EvidenceMap(
        we=_accumulate((h, w), windows, config.k, terms),
        counts=window_counts(h, w, config.k),
        class_index=c,
        method=Method.GRADIENT.value,
        config=config.header(),
        forward_passes=1,
        backward_passes=1,
    )


def saliency_map(net: Network, x: np.ndarray, c: int) -> EvidenceMap:
    """Class saliency: per-pixel |dP(c|x)/dx| summed over channels."""
    x = _check_input(net, x, c)
    grad = net.input_gradient(x, c)
    return EvidenceMap(
        we=np.abs(grad).sum(axis=0),
        counts=np.ones(x.shape[1:], dtype=np.int64),
        class_index=c,
        method=Method.SALIENCY.value,
        config={"k": 1, "l": 1, "S": 0, "seed": 0},
        forward_passes=1,
        backward_passes=1,
    )


Explainer = Callable[[Network, np.ndarray, int, AnyModel, ExplainConfig], EvidenceMap]

EXPLAINERS = {
    Method.ORIGINAL: pda_original,
    Method.EFFICIENT: pda_efficient,
    Method.SAMPLED_MEAN: pda_sampled_mean,
    Method.GRADIENT: pda_gradient,
}


def explain(
    net: Network,
    x: np.ndarray,
    c: int,
    model: Optional[AnyModel],
    config: ExplainConfig,
) -> EvidenceMap:
    """Dispatch on ``config.method``."""
    if config.method == Method.SALIENCY:
        return saliency_map(net, x, c)
    if model is None:
        raise EvidenceError(f"method {config.method.value} needs a window model")
    explainer: Explainer = EXPLAINERS[config.method]
    return explainer(net, x, c, model, config)
