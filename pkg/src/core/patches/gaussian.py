"""
Patch Gaussian
==============

Translation-invariant multivariate Gaussian over l x l outer patches and the
conditional distribution of an inner k x k window given the surrounding ring.

Pixel ordering inside a patch vector is channel-major, then row-major:
index = c * side * side + row * side + col.
"""

from typing import Dict, Iterator, Optional, Tuple
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from src.config.logging import get_logger

logger = get_logger(__name__)

Offset = Tuple[int, int]

# images per chunk when accumulating patch statistics
_CHUNK = 256


class PatchModelError(Exception):
    """Exception raised for invalid patch-model fits or queries."""

    pass


@dataclass(frozen=True)
class ConditionalFactors:
    """Cached conditional quantities for one inner-window offset."""

    window_index: np.ndarray
    ring_index: np.ndarray
    regression: np.ndarray  # A = S_wo S_oo^-1, shape (d_w, d_o)
    covariance: np.ndarray  # S_c = S_ww - A S_ow
    cholesky: np.ndarray  # lower L with L L^T = S_c


def window_indices(channels: int, side: int, k: int, offset: Offset) -> np.ndarray:
    """Patch-vector indices of the k x k window at ``offset`` (channel-major)."""
    top, left = offset
    c, r, q = np.meshgrid(
        np.arange(channels), np.arange(top, top + k), np.arange(left, left + k), indexing="ij"
    )
    return (c * side * side + r * side + q).ravel()


def psd_cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a PSD matrix; the zero matrix factors to zero."""
    if matrix.size == 0:
        return np.zeros_like(matrix)
    if not np.any(matrix):
        return np.zeros_like(matrix)
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as e:
        raise PatchModelError(
            "conditional covariance is not positive definite; refit with a positive ridge"
        ) from e


class PatchModel:
    """Gaussian over l x l patches with conditional factors for every k x k offset."""

    def __init__(
        self,
        k: int,
        l: int,  # noqa: E741
        channels: int,
        mean: np.ndarray,
        covariance: np.ndarray,
        ridge: float,
    ) -> None:
        if not 1 <= k <= l:
            raise PatchModelError(f"window k={k} must satisfy 1 <= k <= l={l}")
        dim = channels * l * l
        mean = np.asarray(mean, dtype=np.float64)
        covariance = np.asarray(covariance, dtype=np.float64)
        if mean.shape != (dim,) or covariance.shape != (dim, dim):
            raise PatchModelError(
                f"mean {mean.shape} / covariance {covariance.shape} do not match dimension {dim}"
            )
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=1e-12):
            raise PatchModelError("covariance must be symmetric")
        if ridge < 0:
            raise PatchModelError(f"ridge must be non-negative, got {ridge}")
        self.k = k
        self.l = l
        self.channels = channels
        self.mean = mean
        self.covariance = covariance
        self.ridge = float(ridge)
        self.regularized = covariance + self.ridge * np.eye(dim)
        try:
            linalg.cholesky(self.regularized, lower=True)
        except linalg.LinAlgError as e:
            raise PatchModelError(
                "patch covariance is singular; increase the ridge (e.g. --ridge 1e-4)"
            ) from e
        self._factors: Dict[Offset, ConditionalFactors] = {
            offset: self._build_factors(offset) for offset in self.offsets()
        }
        logger.debug("Patch model ready", k=k, l=l, channels=channels, offsets=len(self._factors))

    @property
    def window_dim(self) -> int:
        return self.channels * self.k * self.k

    @property
    def ring_dim(self) -> int:
        return self.channels * (self.l * self.l - self.k * self.k)

    def offsets(self) -> Iterator[Offset]:
        span = self.l - self.k + 1
        for top in range(span):
            for left in range(span):
                yield (top, left)

    def _build_factors(self, offset: Offset) -> ConditionalFactors:
        w_idx = window_indices(self.channels, self.l, self.k, offset)
        mask = np.ones(self.channels * self.l * self.l, dtype=bool)
        mask[w_idx] = False
        o_idx = np.flatnonzero(mask)
        s = self.regularized
        s_ww = s[np.ix_(w_idx, w_idx)]
        if o_idx.size == 0:
            regression = np.zeros((w_idx.size, 0))
            cond = s_ww.copy()
        else:
            s_wo = s[np.ix_(w_idx, o_idx)]
            s_oo = s[np.ix_(o_idx, o_idx)]
            factor = linalg.cho_factor(s_oo, lower=True)
            regression = linalg.cho_solve(factor, s_wo.T).T
            cond = s_ww - regression @ s_wo.T
        cond = 0.5 * (cond + cond.T)
        return ConditionalFactors(w_idx, o_idx, regression, cond, psd_cholesky(cond))

    def factors(self, offset: Offset) -> ConditionalFactors:
        try:
            return self._factors[tuple(offset)]  # type: ignore[index]
        except KeyError:
            raise PatchModelError(
                f"offset {offset} is not a placement of a {self.k}x{self.k} window in a "
                f"{self.l}x{self.l} patch"
            ) from None

    def eigenvalue_range(self) -> Tuple[float, float]:
        values = linalg.eigvalsh(self.regularized)
        return float(values[0]), float(values[-1])

    def marginal(self, offset: Offset = (0, 0)) -> "MarginalModel":
        """Per-pixel marginal of the window at ``offset`` (unregularized variances)."""
        idx = self.factors(offset).window_index
        return MarginalModel(
            self.k,
            self.channels,
            self.mean[idx].reshape(self.channels, self.k, self.k),
            np.diag(self.covariance)[idx].reshape(self.channels, self.k, self.k),
        )


class MarginalModel:
    """Independent per-pixel Gaussian over a k x k window, pooled over positions."""

    def __init__(self, k: int, channels: int, mean: np.ndarray, variance: np.ndarray) -> None:
        mean = np.asarray(mean, dtype=np.float64)
        variance = np.asarray(variance, dtype=np.float64)
        if mean.shape != (channels, k, k) or variance.shape != (channels, k, k):
            raise PatchModelError(
                f"marginal mean/variance must be ({channels}, {k}, {k}), "
                f"got {mean.shape} / {variance.shape}"
            )
        if np.any(variance < 0):
            raise PatchModelError("marginal variances must be non-negative")
        self.k = k
        self.channels = channels
        self.mean = mean
        self.variance = variance
        self.std = np.sqrt(variance)


def _check_images(images: np.ndarray, side: int) -> np.ndarray:
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        images = images[:, None]
    if images.ndim != 4:
        raise PatchModelError(f"images must be (N, C, H, W), got {images.shape}")
    if images.shape[0] < 2:
        raise PatchModelError("need at least 2 images to fit patch statistics")
    if images.shape[2] < side or images.shape[3] < side:
        raise PatchModelError(
            f"images of size {images.shape[2]}x{images.shape[3]} are smaller than the "
            f"{side}x{side} patch"
        )
    return images


def _patch_chunks(images: np.ndarray, side: int) -> Iterator[np.ndarray]:
    n, c = images.shape[:2]
    for start in range(0, n, _CHUNK):
        block = images[start : start + _CHUNK]
        windows = sliding_window_view(block, (side, side), axis=(2, 3))  # (b, c, i, j, s, s)
        yield np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
            -1, c * side * side
        )


def patch_statistics(images: np.ndarray, side: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Mean and (population) covariance of all side x side patches, two passes."""
    images = _check_images(images, side)
    total = np.zeros(images.shape[1] * side * side)
    count = 0
    for patches in _patch_chunks(images, side):
        total += patches.sum(axis=0)
        count += patches.shape[0]
    mean = total / count
    scatter = np.zeros((mean.size, mean.size))
    for patches in _patch_chunks(images, side):
        centered = patches - mean
        scatter += centered.T @ centered
    covariance = scatter / count
    return mean, 0.5 * (covariance + covariance.T), count


def default_ridge(mean: np.ndarray, covariance: np.ndarray, ridge_scale: float) -> float:
    """``ridge_scale * mean(diag(covariance))``, or ``ridge_scale`` for (near-)constant data.

    Variances below float64 resolution relative to the squared pixel level are
    rounding residue of the mean, not signal.
    """
    diag_mean = float(np.mean(np.diag(covariance)))
    floor = np.finfo(np.float64).eps * max(1.0, float(np.mean(mean**2)))
    return ridge_scale * diag_mean if diag_mean > floor else ridge_scale


def fit_patch_model(
    images: np.ndarray,
    k: int,
    l: int,  # noqa: E741
    ridge: Optional[float] = None,
    ridge_scale: float = 1e-4,
) -> PatchModel:
    """Fit the pooled l x l patch Gaussian.

    Args:
        images: Training images (N, C, H, W)
        k: Inner window side
        l: Outer patch side
        ridge: Absolute diagonal regularizer; defaults to
            ``ridge_scale * mean(diag(covariance))`` (``ridge_scale`` itself
            when the data has no variance)
        ridge_scale: Relative ridge used when ``ridge`` is None

    Raises:
        PatchModelError: On undersized images or a singular covariance
    """
    if not 1 <= k <= l:
        raise PatchModelError(f"window k={k} must satisfy 1 <= k <= l={l}")
    mean, covariance, count = patch_statistics(images, l)
    if ridge is None:
        ridge = default_ridge(mean, covariance, ridge_scale)
    model = PatchModel(k, l, int(np.asarray(images).shape[1]), mean, covariance, ridge)
    logger.info("Patch model fitted", k=k, l=l, patches=count, ridge=ridge)
    return model


def fit_marginal(images: np.ndarray, k: int) -> MarginalModel:
    """Per-pixel window marginals pooled over every k x k window position."""
    images = _check_images(images, k)
    n, c, h, w = images.shape
    rows, cols = h - k + 1, w - k + 1
    mean = np.empty((c, k, k))
    variance = np.empty((c, k, k))
    for a in range(k):
        for b in range(k):
            pixels = images[:, :, a : a + rows, b : b + cols].transpose(1, 0, 2, 3).reshape(c, -1)
            m = pixels.mean(axis=1)
            mean[:, a, b] = m
            variance[:, a, b] = ((pixels - m[:, None]) ** 2).mean(axis=1)
    logger.info("Marginal model fitted", k=k, channels=c, images=n)
    return MarginalModel(k, c, mean, variance)


# Placement


def outer_patch_origin(
    height: int, width: int, top: int, left: int, k: int, l: int  # noqa: E741
) -> Offset:
    """Top-left corner of the l x l patch conditioning the window at (top, left).

    The patch is centred on the window and shifted inward at image borders.
    """
    if height < l or width < l:
        raise PatchModelError(f"image {height}x{width} is smaller than the {l}x{l} outer patch")
    margin = (l - k) // 2
    return (
        min(max(top - margin, 0), height - l),
        min(max(left - margin, 0), width - l),
    )


def ring_for_window(
    model: PatchModel, image: np.ndarray, top: int, left: int
) -> Tuple[Offset, np.ndarray]:
    """Inner offset and observed ring values for the window at (top, left)."""
    _, h, w = image.shape
    o_top, o_left = outer_patch_origin(h, w, top, left, model.k, model.l)
    offset = (top - o_top, left - o_left)
    patch = image[:, o_top : o_top + model.l, o_left : o_left + model.l].reshape(-1)
    return offset, patch[model.factors(offset).ring_index]


# Conditional queries


def conditional_params(
    model: PatchModel, offset: Offset, ring_values: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Conditional mean of the window and the cached Cholesky factor.

    mean_w = mu_w + A (ring - mu_o)
    """
    f = model.factors(offset)
    ring = np.asarray(ring_values, dtype=np.float64).reshape(-1)
    if ring.size != f.ring_index.size:
        raise PatchModelError(f"ring has {ring.size} values, expected {f.ring_index.size}")
    mean_w = model.mean[f.window_index] + f.regression @ (ring - model.mean[f.ring_index])
    return mean_w, f.cholesky


def sample_conditional(
    model: PatchModel,
    offset: Offset,
    ring_values: np.ndarray,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """Draw mean_w + L eta with eta standard normal; ``size`` draws a stack."""
    mean_w, chol = conditional_params(model, offset, ring_values)
    if size is None:
        return mean_w + chol @ rng.standard_normal(mean_w.size)
    eta = rng.standard_normal((size, mean_w.size))
    return mean_w + eta @ chol.T


def marginal_mean(model: MarginalModel) -> np.ndarray:
    return model.mean.copy()


def sample_marginal(
    model: MarginalModel, rng: np.random.Generator, size: Optional[int] = None
) -> np.ndarray:
    """Independent per-pixel draws, shape (C, k, k) or (size, C, k, k)."""
    shape = model.mean.shape if size is None else (size,) + model.mean.shape
    return model.mean + model.std * rng.standard_normal(shape)
