"""
Window Fillers
==============

Replacement values for a marginalized window: the window's mean or samples
from its distribution, conditional on the surrounding ring or marginal.
"""

from typing import Union
from abc import ABC, abstractmethod

import numpy as np

from src.core.evidence.maps import EvidenceError
from src.core.patches.gaussian import (
    MarginalModel,
    PatchModel,
    conditional_params,
    ring_for_window,
    sample_conditional,
    sample_marginal,
)
from src.models.schemas import ExplainConfig, Sampling


class WindowFiller(ABC):
    """Window distribution P(x_w | context) used by the attribution methods."""

    k: int
    channels: int

    @abstractmethod
    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        """Expected window contents, shape (C, k, k)."""
        pass

    @abstractmethod
    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        """``count`` draws, shape (count, C, k, k)."""
        pass


class ConditionalFiller(WindowFiller):
    """Window given its l x l outer patch."""

    def __init__(self, model: PatchModel) -> None:
        self.model = model
        self.k = model.k
        self.channels = model.channels

    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        offset, ring = ring_for_window(self.model, image, top, left)
        mean_w, _ = conditional_params(self.model, offset, ring)
        return mean_w.reshape(self.channels, self.k, self.k)

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        offset, ring = ring_for_window(self.model, image, top, left)
        draws = sample_conditional(self.model, offset, ring, rng, size=count)
        return draws.reshape(count, self.channels, self.k, self.k)


class MarginalFiller(WindowFiller):
    """Window independent of its context."""

    def __init__(self, model: MarginalModel) -> None:
        self.model = model
        self.k = model.k
        self.channels = model.channels

    def mean(self, image: np.ndarray, top: int, left: int) -> np.ndarray:
        return self.model.mean

    def samples(
        self, image: np.ndarray, top: int, left: int, rng: np.random.Generator, count: int
    ) -> np.ndarray:
        return sample_marginal(self.model, rng, size=count)


AnyModel = Union[PatchModel, MarginalModel, WindowFiller]


def make_filler(model: AnyModel, config: ExplainConfig) -> WindowFiller:
    """Wrap a fitted model, checking it against the explanation settings."""
    if isinstance(model, WindowFiller):
        filler = model
    elif isinstance(model, PatchModel):
        if config.sampling != Sampling.CONDITIONAL:
            raise EvidenceError("a conditional patch model was given but sampling is 'marginal'")
        if model.k != config.k or model.l != config.l:
            raise EvidenceError(
                f"patch model was fitted with k={model.k}, l={model.l} but the explanation "
                f"uses k={config.k}, l={config.l}"
            )
        filler = ConditionalFiller(model)
    elif isinstance(model, MarginalModel):
        if config.sampling != Sampling.MARGINAL:
            raise EvidenceError("a marginal model was given but sampling is 'conditional'")
        if model.k != config.k:
            raise EvidenceError(
                f"marginal model was fitted with k={model.k} but the explanation uses k={config.k}"
            )
        filler = MarginalFiller(model)
    else:
        raise EvidenceError(f"unsupported window model {type(model).__name__}")
    if filler.k != config.k:
        raise EvidenceError(f"filler window k={filler.k} does not match k={config.k}")
    return filler
