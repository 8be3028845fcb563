"""
Training
========

Deterministic minibatch SGD (no momentum) on mean cross-entropy.
"""

from typing import Optional, Tuple

import numpy as np

from src.config.logging import get_logger
from src.core.nn.architectures import make_rng
from src.core.nn.datasets import Dataset, TrainingError
from src.core.nn.network import Network
from src.models.schemas import EpochRecord, TrainConfig, TrainReport

logger = get_logger(__name__)


def accuracy(net: Network, dataset: Dataset, batch_size: int = 256) -> float:
    """Fraction of correctly classified images."""
    if len(dataset) == 0:
        raise TrainingError("cannot score an empty dataset")
    correct = 0
    for images, labels in dataset.batches(batch_size):
        correct += int(np.sum(np.argmax(net.forward(images), axis=1) == labels))
    return correct / len(dataset)


def train(
    net: Network,
    dataset: Dataset,
    config: TrainConfig,
    test_set: Optional[Dataset] = None,
) -> Tuple[Network, TrainReport]:
    """Train a copy of ``net``; the input network is left untouched.

    Args:
        net: Initial network
        dataset: Labelled training images
        config: Epochs, learning rate, batch size and shuffling seed
        test_set: Optional held-out set scored after every epoch

    Returns:
        Trained network and its accuracy log

    Raises:
        TrainingError: If the dataset is empty
    """
    if len(dataset) == 0:
        raise TrainingError("training dataset is empty")

    trained = net.copy()
    rng = make_rng(config.seed)
    report = TrainReport()
    log = logger.bind(component="trainer", lr=config.learning_rate, batch=config.batch_size)
    log.info("Training started", images=len(dataset), epochs=config.epochs)

    for epoch in range(1, config.epochs + 1):
        total_loss = 0.0
        for images, labels in dataset.batches(config.batch_size, rng):
            loss, grads = trained.param_gradient(images, labels)
            total_loss += loss * images.shape[0]
            if config.learning_rate == 0.0:
                continue
            for layer, layer_grads in zip(trained.layers, grads):
                params = layer.params()
                for name, grad in layer_grads.items():
                    params[name] -= config.learning_rate * grad

        record = EpochRecord(
            epoch=epoch,
            loss=total_loss / len(dataset),
            train_accuracy=accuracy(trained, dataset),
            test_accuracy=accuracy(trained, test_set) if test_set is not None else None,
        )
        report.epochs.append(record)
        log.info(
            "Epoch finished",
            epoch=epoch,
            loss=round(record.loss, 6),
            train_accuracy=record.train_accuracy,
            test_accuracy=record.test_accuracy,
        )

    report.train_accuracy = accuracy(trained, dataset)
    if test_set is not None:
        report.test_accuracy = accuracy(trained, test_set)
    return trained, report
