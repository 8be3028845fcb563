"""
Test Helpers
============

Finite-difference gradients, kink detection for piece-wise linear
networks, and a small timer.
"""

import time
from typing import Any, Dict, List, Optional, Union

import numpy as np

from src.core.nn.layers import MaxPool2D, ReLU
from src.core.nn.network import Network

FD_STEP = 1e-5


class TestTimer:
    """Context manager measuring wall-clock milliseconds."""

    __test__ = False

    def __init__(self) -> None:
        self.elapsed_ms = 0.0
        self._start: Optional[float] = None

    def __enter__(self) -> "TestTimer":
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc: Any) -> None:
        assert self._start is not None
        self.elapsed_ms = 1000.0 * (time.perf_counter() - self._start)


def numeric_input_gradient(
    net: Network, x: np.ndarray, c: int, step: float = FD_STEP
) -> np.ndarray:
    """Central differences of P(c|x) for every input element."""
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    for i in range(x.size):
        plus = x.copy().reshape(-1)
        minus = x.copy().reshape(-1)
        plus[i] += step
        minus[i] -= step
        p_plus = net.forward(plus.reshape(x.shape)[None])[0, c]
        p_minus = net.forward(minus.reshape(x.shape)[None])[0, c]
        flat[i] = (p_plus - p_minus) / (2.0 * step)
    return grad


def numeric_param_gradients(
    net: Network, x: np.ndarray, target: Union[int, np.ndarray], step: float = FD_STEP
) -> List[Dict[str, np.ndarray]]:
    """Central differences of the cross-entropy loss for every weight."""
    grads: List[Dict[str, np.ndarray]] = []
    for layer in net.layers:
        layer_grads: Dict[str, np.ndarray] = {}
        for name, param in layer.params().items():
            g = np.zeros_like(param)
            flat_param = param.reshape(-1)
            flat_g = g.reshape(-1)
            for i in range(param.size):
                saved = flat_param[i]
                flat_param[i] = saved + step
                loss_plus, _ = net.param_gradient(x, target)
                flat_param[i] = saved - step
                loss_minus, _ = net.param_gradient(x, target)
                flat_param[i] = saved
                flat_g[i] = (loss_plus - loss_minus) / (2.0 * step)
            layer_grads[name] = g
        grads.append(layer_grads)
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max absolute difference scaled by the larger gradient magnitude."""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-12)
    return float(np.max(np.abs(analytic - numeric))) / scale


def kink_margin(net: Network, batch: np.ndarray) -> float:
    """Distance of the batch from the nearest ReLU kink or max-pool tie.

    Finite differences are only trusted when this margin exceeds the step
    by a wide factor.
    """
    margin = np.inf
    x = np.asarray(batch, dtype=np.float64)
    for layer in net.layers:
        if isinstance(layer, ReLU):
            margin = min(margin, float(np.min(np.abs(x))))
        elif isinstance(layer, MaxPool2D):
            n, c, h, w = x.shape
            ho, wo = h // 2, w // 2
            blocks = (
                x[:, :, : 2 * ho, : 2 * wo]
                .reshape(n, c, ho, 2, wo, 2)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(n, c, ho, wo, 4)
            )
            ordered = np.sort(blocks, axis=-1)
            gaps = ordered[..., -1] - ordered[..., -2]
            # ties among units a ReLU switched off stay off under the step
            live = ordered[..., -1] != 0.0
            if np.any(live):
                margin = min(margin, float(np.min(gaps[live])))
        x, _ = layer.forward(x)
    return margin


def smooth_input(
    net: Network, rng: np.random.Generator, min_margin: float = 20 * FD_STEP, tries: int = 200
) -> np.ndarray:
    """Random input in [0, 1) whose pre-activations stay clear of kinks and ties.

    The margin is a multiple of the finite-difference step: a single
    perturbed input or weight moves these networks' pre-activations by a few
    steps at most.
    """
    for _ in range(tries):
        x = rng.uniform(0.0, 1.0, size=net.input_shape)
        if kink_margin(net, x[None]) > min_margin:
            return x
    raise RuntimeError("no kink-free input found")


def brute_force_maxpool(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    out = np.empty((n, c, h // 2, w // 2))
    for a in range(n):
        for b in range(c):
            for i in range(h // 2):
                for j in range(w // 2):
                    out[a, b, i, j] = max(
                        x[a, b, 2 * i, 2 * j],
                        x[a, b, 2 * i, 2 * j + 1],
                        x[a, b, 2 * i + 1, 2 * j],
                        x[a, b, 2 * i + 1, 2 * j + 1],
                    )
    return out
