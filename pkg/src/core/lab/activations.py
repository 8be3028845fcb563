"""
Activation Statistics Lab
=========================

Per-neuron mean and standard deviation of pre-activation dense outputs over
a batch of images whose window was refilled with sampled values.
"""

from typing import List, Tuple
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.config.logging import get_logger
from src.core.evidence.algorithms import DRAW_SAMPLES, fill_window, window_fills
from src.core.evidence.fillers import AnyModel, make_filler
from src.core.lab.mean_comparison import window_config
from src.core.lab.reporting import LabError, histogram, write_csv, write_histogram_csv
from src.core.nn.layers import Dense
from src.core.nn.network import Network

logger = get_logger(__name__)


@dataclass
class LayerStatistics:
    """Batch statistics of one dense layer's outputs."""

    layer: int
    mean: np.ndarray
    std: np.ndarray

    @property
    def neurons(self) -> int:
        return int(self.mean.size)


def dense_layer_indices(net: Network) -> List[int]:
    return [i for i, layer in enumerate(net.layers) if isinstance(layer, Dense)]


def activation_stats(
    net: Network,
    x: np.ndarray,
    model: AnyModel,
    window: Tuple[int, int],
    samples: int = 160,
    seed: int = 0,
) -> List[LayerStatistics]:
    """Statistics at every dense layer for ``samples`` refills of one window.

    The standard deviation is the population one, computed in two passes.

    Raises:
        LabError: If the network has no dense layer
    """
    indices = dense_layer_indices(net)
    if not indices:
        raise LabError("network has no dense layers")
    x = np.asarray(x, dtype=np.float64)
    filler = make_filler(model, window_config(model, samples, seed))
    top, left = window
    if top < 0 or left < 0 or top + filler.k > x.shape[1] or left + filler.k > x.shape[2]:
        raise LabError(f"window at {window} does not fit a {x.shape[1]}x{x.shape[2]} image")

    fills = window_fills(filler, x, window, DRAW_SAMPLES, samples, seed)
    batch = np.stack([fill_window(x, window, filler.k, fill) for fill in fills])
    outputs = net.activations(batch)

    results = []
    for i in indices:
        values = outputs[i].reshape(samples, -1)
        mean = np.mean(values, axis=0)
        std = np.sqrt(np.mean((values - mean) ** 2, axis=0))
        results.append(LayerStatistics(layer=i, mean=mean, std=std))
        logger.debug("Layer statistics", layer=i, neurons=mean.size, mean_std=float(std.mean()))
    return results


def write_activation_csvs(
    stats: List[LayerStatistics], output_dir: Path, seed: int, bins: int = 10
) -> List[Path]:
    """``activations.csv`` with one row per neuron plus mean/std histograms per layer."""
    output_dir = Path(output_dir)
    rows = [
        (s.layer, j, float(s.mean[j]), float(s.std[j])) for s in stats for j in range(s.neurons)
    ]
    header = ("layer", "neuron", "mean", "std")
    paths = [write_csv(output_dir / "activations.csv", header, rows, seed)]
    for s in stats:
        for name, values in (("mean", s.mean), ("std", s.std)):
            counts, edges = histogram(values, bins)
            path = output_dir / f"layer{s.layer}_{name}_hist.csv"
            paths.append(write_histogram_csv(path, counts, edges, seed))
    return paths
