"""
Test Configuration
==================

Pytest configuration with fixtures shared by unit, integration and
performance tests: testing settings, small networks, window models and
synthetic MNIST-style IDX directories.
"""

from pathlib import Path
from typing import Generator

import numpy as np
import pytest

import src.config.settings as settings_module
from src.config.settings import Settings
from src.core.nn.architectures import make_rng, mnist_cnn
from src.core.nn.datasets import Dataset
from src.core.nn.network import Network
from src.core.patches.gaussian import MarginalModel, PatchModel, fit_marginal, fit_patch_model
from tests.utils.data_generators import small_cnn, synthetic_digits, write_mnist_dir


class TestSettings(Settings):
    """Test-specific settings: small MNIST widths, no log files."""

    __test__ = False

    environment: str = "testing"
    log_level: str = "WARNING"
    conv1_filters: int = 4
    conv2_filters: int = 6
    dense_units: int = 16
    epochs: int = 1


@pytest.fixture(scope="session")
def test_settings() -> TestSettings:
    """Test settings fixture."""
    return TestSettings()


@pytest.fixture(autouse=True)
def override_settings(
    test_settings: TestSettings, monkeypatch: pytest.MonkeyPatch
) -> Generator[TestSettings, None, None]:
    """Install the testing settings as the global singleton."""
    monkeypatch.setattr(settings_module, "settings", test_settings.model_copy())
    yield settings_module.settings  # type: ignore[misc]


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234)


@pytest.fixture
def tiny_cnn() -> Network:
    """Conv-ReLU-Pool-Dense-Softmax on 1x8x8 inputs with 3 classes."""
    return small_cnn(make_rng(7), channels=1, size=8, classes=3)


@pytest.fixture
def tiny_image(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=(1, 8, 8))


@pytest.fixture(scope="session")
def digits() -> Dataset:
    """120 synthetic 28x28 digit-like images with 10 classes."""
    images, labels = synthetic_digits(make_rng(99), 120)
    return Dataset(images, labels)


@pytest.fixture(scope="session")
def digit_net(test_settings: TestSettings) -> Network:
    """Untrained MNIST-architecture network with the small testing widths."""
    return mnist_cnn(seed=3, settings=test_settings)


@pytest.fixture(scope="session")
def marginal_model(digits: Dataset) -> MarginalModel:
    return fit_marginal(digits.images, 4)


@pytest.fixture(scope="session")
def conditional_model(digits: Dataset) -> PatchModel:
    return fit_patch_model(digits.images, 4, 8)


@pytest.fixture
def mnist_dir(tmp_path: Path) -> Path:
    """IDX directory with 60 training and 20 test synthetic digits."""
    return write_mnist_dir(tmp_path / "mnist", make_rng(5), train=60, test=20)
