"""
Architectures
=============

Network builders: the 6-layer MNIST classifier and small random networks.
"""

from typing import Optional, Sequence

import numpy as np

from src.config.settings import Settings, get_settings
from src.core.nn.layers import Conv2D, Dense, Flatten, MaxPool2D, ReLU, Softmax, Layer
from src.core.nn.network import Network


def make_rng(seed: int) -> np.random.Generator:
    """The project's single deterministic generator (PCG64, 64-bit seeds)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def he_conv(rng: np.random.Generator, out_c: int, in_c: int, k: int) -> Conv2D:
    fan_in = in_c * k * k
    weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_c, in_c, k, k))
    return Conv2D(weight, np.zeros(out_c))


def he_dense(rng: np.random.Generator, n_in: int, n_out: int) -> Dense:
    weight = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
    return Dense(weight, np.zeros(n_out))


def mnist_cnn(
    seed: int = 0,
    settings: Optional[Settings] = None,
    input_shape: Sequence[int] = (1, 28, 28),
    classes: int = 10,
) -> Network:
    """conv-relu-pool-conv-relu-pool-dense-relu-dense-softmax with He initialisation.

    Filter counts and widths come from settings (conv1_filters, conv2_filters,
    kernel_size, dense_units).
    """
    settings = settings or get_settings()
    rng = make_rng(seed)
    c, h, w = input_shape
    k = settings.kernel_size
    conv1 = he_conv(rng, settings.conv1_filters, c, k)
    h, w = (h - k + 1) // 2, (w - k + 1) // 2
    conv2 = he_conv(rng, settings.conv2_filters, settings.conv1_filters, k)
    h, w = (h - k + 1) // 2, (w - k + 1) // 2
    flat = settings.conv2_filters * h * w
    layers: Sequence[Layer] = [
        conv1,
        ReLU(),
        MaxPool2D(),
        conv2,
        ReLU(),
        MaxPool2D(),
        Flatten(),
        he_dense(rng, flat, settings.dense_units),
        ReLU(),
        he_dense(rng, settings.dense_units, classes),
        Softmax(),
    ]
    return Network(layers, input_shape)


def linear_classifier(weight: np.ndarray, bias: np.ndarray, input_shape: Sequence[int]) -> Network:
    """Flatten-Dense-Softmax: logits are an affine function of the input."""
    weight = np.asarray(weight, dtype=np.float64)
    layers: Sequence[Layer] = [Flatten(), Dense(weight, bias), Softmax()]
    return Network(layers, input_shape)
