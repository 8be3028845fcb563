"""
End-to-End Tests on MNIST
=========================

Train the full-width network on real MNIST, then check accuracy, the
faithfulness of the efficient approximation and the localisation of its
evidence, and the spread of mean-fill errors. Skipped unless
``EVLENS_DATA_DIR`` points at the IDX files.
"""

import os
from pathlib import Path
from typing import Tuple

import numpy as np
import pytest
from scipy import ndimage

from src.config.settings import Settings
from src.core.evidence.algorithms import pda_efficient, pda_original
from src.core.evidence.maps import map_correlation
from src.core.lab.mean_comparison import am_vs_ngm
from src.core.lab.reporting import error_histogram
from src.core.nn.architectures import mnist_cnn
from src.core.nn.datasets import Dataset, load_mnist
from src.core.nn.network import Network
from src.core.nn.training import accuracy, train
from src.core.patches.gaussian import PatchModel, fit_patch_model
from src.models.schemas import ExplainConfig, Method, Sampling, TrainConfig

DATA_DIR = os.environ.get("EVLENS_DATA_DIR")

pytestmark = [
    pytest.mark.integration,
    pytest.mark.slow,
    pytest.mark.requires_mnist,
    pytest.mark.skipif(DATA_DIR is None, reason="EVLENS_DATA_DIR is not set"),
]

SAMPLE_DIGITS = 10


@pytest.fixture(scope="module")
def mnist() -> Tuple[Dataset, Dataset]:
    assert DATA_DIR is not None
    return load_mnist(Path(DATA_DIR), "train"), load_mnist(Path(DATA_DIR), "test")


@pytest.fixture(scope="module")
def trained_net(mnist) -> Network:
    train_set, _ = mnist
    settings = Settings(_env_file=None)
    config = TrainConfig(
        epochs=settings.epochs,
        learning_rate=settings.learning_rate,
        batch_size=settings.train_batch_size,
        seed=0,
    )
    net, _ = train(mnist_cnn(0, settings), train_set, config)
    return net


@pytest.fixture(scope="module")
def window_model(mnist) -> PatchModel:
    train_set, _ = mnist
    return fit_patch_model(train_set.images[:5000], 4, 8)


def foreground_hit_rate(we: np.ndarray, image: np.ndarray) -> float:
    """Share of the top-decile |WE| pixels inside the dilated digit mask."""
    mask = ndimage.binary_dilation(image[0] > 0.5, iterations=2)
    magnitude = np.abs(we)
    top = magnitude >= np.quantile(magnitude, 0.9)
    return float(np.count_nonzero(top & mask)) / float(np.count_nonzero(top))


class TestTrainedNetwork:
    """Test the accuracy bar for the 6-layer network."""

    def test_test_accuracy(self, trained_net, mnist):
        _, test_set = mnist
        assert accuracy(trained_net, test_set) >= 0.98


class TestExplanations:
    """Test evidence maps of the trained network on test digits."""

    def test_evidence_lies_on_the_digit(self, trained_net, window_model, mnist):
        _, test_set = mnist
        config = ExplainConfig(k=4, l=8, method=Method.EFFICIENT, sampling=Sampling.CONDITIONAL)
        hits = 0
        for i in range(SAMPLE_DIGITS):
            x = test_set.images[i]
            c = trained_net.predict(x)[0]
            evidence = pda_efficient(trained_net, x, c, window_model, config)
            assert evidence.we.shape == (28, 28)
            hits += foreground_hit_rate(evidence.values(), x) >= 0.6
        assert hits >= 8

    def test_efficient_tracks_sampled_reference(self, trained_net, window_model, mnist):
        _, test_set = mnist
        efficient = ExplainConfig(k=4, l=8, method=Method.EFFICIENT, sampling=Sampling.CONDITIONAL)
        reference = ExplainConfig(
            k=4, l=8, samples=500, method=Method.ORIGINAL, sampling=Sampling.CONDITIONAL, seed=1
        )
        agreeing = 0
        for i in range(SAMPLE_DIGITS):
            x = test_set.images[i]
            c = trained_net.predict(x)[0]
            fast = pda_efficient(trained_net, x, c, window_model, efficient)
            slow = pda_original(trained_net, x, c, window_model, reference)
            agreeing += map_correlation(fast, slow) >= 0.8
        assert agreeing >= 8


class TestMeanApproximation:
    """Test how far the mean fill moves P(c|x) from the sampled average."""

    def test_errors_concentrate_in_lowest_bin(self, trained_net, window_model, mnist):
        _, test_set = mnist
        cases = am_vs_ngm(
            trained_net, list(test_set.images[:200]), window_model, (12, 12), samples_ref=200
        )
        assert len(cases) == 200
        counts, _ = error_histogram([case.error for case in cases])
        assert counts[0] > counts[1:].max(), counts
