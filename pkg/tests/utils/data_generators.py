"""
Test Data Generators
====================

Random networks, synthetic digit images and IDX directories.
"""

from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np

from src.core.nn.datasets import write_idx_images, write_idx_labels
from src.core.nn.layers import Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU, Sigmoid, Softmax
from src.core.nn.network import Network


def small_cnn(
    rng: np.random.Generator, channels: int = 1, size: int = 8, classes: int = 3, filters: int = 2
) -> Network:
    """Conv(3x3)-ReLU-MaxPool-Flatten-Dense-Softmax."""
    pooled = (size - 2) // 2
    layers: List[Layer] = [
        Conv2D(rng.normal(0.0, 0.5, (filters, channels, 3, 3)), rng.normal(0.0, 0.1, filters)),
        ReLU(),
        MaxPool2D(),
        Flatten(),
        Dense(
            rng.normal(0.0, 0.5, (filters * pooled * pooled, classes)),
            rng.normal(0.0, 0.1, classes),
        ),
        Softmax(),
    ]
    return Network(layers, (channels, size, size))


def sigmoid_mlp(
    rng: np.random.Generator, shape: Tuple[int, int, int], hidden: int, classes: int
) -> Network:
    """Flatten-Dense-Sigmoid-Dense-Softmax."""
    n_in = int(np.prod(shape))
    layers: List[Layer] = [
        Flatten(),
        Dense(rng.normal(0.0, 0.7, (n_in, hidden)), rng.normal(0.0, 0.2, hidden)),
        Sigmoid(),
        Dense(rng.normal(0.0, 0.7, (hidden, classes)), rng.normal(0.0, 0.2, classes)),
        Softmax(),
    ]
    return Network(layers, shape)


def deep_cnn(rng: np.random.Generator) -> Network:
    """Two conv blocks on a 2x10x10 input, ReLU dense head."""
    layers: List[Layer] = [
        Conv2D(rng.normal(0.0, 0.4, (3, 2, 3, 3)), rng.normal(0.0, 0.1, 3)),
        ReLU(),
        MaxPool2D(),
        Conv2D(rng.normal(0.0, 0.4, (2, 3, 2, 2)), rng.normal(0.0, 0.1, 2)),
        Sigmoid(),
        Flatten(),
        Dense(rng.normal(0.0, 0.5, (2 * 3 * 3, 5)), rng.normal(0.0, 0.1, 5)),
        ReLU(),
        Dense(rng.normal(0.0, 0.5, (5, 4)), rng.normal(0.0, 0.1, 4)),
        Softmax(),
    ]
    return Network(layers, (2, 10, 10))


NETWORK_BUILDERS: List[Tuple[str, Callable[[np.random.Generator], Network]]] = [
    ("cnn", lambda rng: small_cnn(rng, channels=1, size=8, classes=3)),
    ("cnn_rgb", lambda rng: small_cnn(rng, channels=3, size=6, classes=4, filters=3)),
    ("mlp", lambda rng: sigmoid_mlp(rng, (1, 3, 3), hidden=5, classes=3)),
    ("deep", deep_cnn),
]


def random_networks(count: int, seed: int = 0) -> List[Tuple[str, Network]]:
    """``count`` random networks cycling through the builders."""
    rng = np.random.Generator(np.random.PCG64(seed))
    nets = []
    for i in range(count):
        name, build = NETWORK_BUILDERS[i % len(NETWORK_BUILDERS)]
        nets.append((f"{name}-{i}", build(rng)))
    return nets


def synthetic_digits(
    rng: np.random.Generator, count: int, size: int = 28, classes: int = 10
) -> Tuple[np.ndarray, np.ndarray]:
    """Dark images with a bright class-dependent stroke plus noise.

    Class c draws a vertical bar whose column depends on c and a horizontal
    bar for even classes, so classes are separable and pixels correlate
    locally like handwriting strokes.
    """
    labels = np.arange(count) % classes
    images = np.clip(rng.normal(0.05, 0.05, (count, 1, size, size)), 0.0, 1.0)
    for i, c in enumerate(labels):
        col = 4 + (c * (size - 10)) // max(classes - 1, 1)
        top = int(rng.integers(3, 7))
        images[i, 0, top : size - 3, col : col + 3] = rng.uniform(0.7, 1.0)
        if c % 2 == 0:
            row = size // 2 + int(rng.integers(-2, 3))
            images[i, 0, row : row + 2, 5 : size - 5] = rng.uniform(0.6, 1.0)
    return images, labels.astype(np.int64)


def write_mnist_dir(path: Path, rng: np.random.Generator, train: int = 60, test: int = 20) -> Path:
    """IDX files named like the MNIST distribution."""
    path.mkdir(parents=True, exist_ok=True)
    for count, image_name, label_name in (
        (train, "train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        (test, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ):
        images, labels = synthetic_digits(rng, count)
        write_idx_images(images, path / image_name)
        write_idx_labels(labels, path / label_name)
    return path
