"""
Test Mocks
==========

Window fillers with known, deterministic behaviour for checking the
attribution algorithms against exact answers.
"""

from typing import Dict, Sequence

import numpy as np

from src.core.evidence.fillers import WindowFiller


class MockDiscreteFiller(WindowFiller):
    """Window takes each of ``values`` with equal probability.

    ``samples`` cycles through the values in order, so with a sample count
    that is a multiple of ``len(values)`` the sample average is the exact
    expectation.
    """

    def __init__(self, values: Sequence[float], k: int = 1, channels: int = 1) -> None:
        self.values = np.asarray(values, dtype=np.float64)
        self.k = k
        self.channels = channels

    def _fill(self, value: float) -> np.ndarray:
        return np.full((self.channels, self.k, self.k), value)

    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        return self._fill(float(self.values.mean()))

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        picks = np.resize(self.values, count)
        return np.stack([self._fill(float(v)) for v in picks])


class MockRandomDiscreteFiller(MockDiscreteFiller):
    """Window takes one of ``values`` drawn uniformly at random from ``rng``."""

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        picks = rng.choice(self.values, size=count)
        return np.broadcast_to(
            picks[:, None, None, None], (count, self.channels, self.k, self.k)
        ).copy()


class MockMeanOnlyFiller(WindowFiller):
    """Every sample equals the wrapped filler's mean."""

    def __init__(self, base: WindowFiller) -> None:
        self.base = base
        self.k = base.k
        self.channels = base.channels

    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        return self.base.mean(image, top, left)

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        return np.repeat(self.mean(image, top, left)[None], count, axis=0)


class MockShiftedFiller(WindowFiller):
    """Mean is the observed window moved by ``delta * direction``.

    Makes x - x' small and controllable for first-order checks.
    """

    def __init__(self, k: int, direction: np.ndarray, delta: float) -> None:
        self.k = k
        self.direction = np.asarray(direction, dtype=np.float64)
        self.channels = int(self.direction.shape[0])
        self.delta = delta

    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        window = image[:, top : top + self.k, left : left + self.k]
        shift = self.direction[:, top : top + self.k, left : left + self.k]
        return window + self.delta * shift

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        return np.repeat(self.mean(image, top, left)[None], count, axis=0)


def create_mock_fillers(k: int = 1, channels: int = 1) -> Dict[str, WindowFiller]:
    """Binary and constant fillers for a k x k window."""
    return {
        "binary": MockDiscreteFiller([0.0, 1.0], k=k, channels=channels),
        "constant": MockDiscreteFiller([0.5], k=k, channels=channels),
    }
