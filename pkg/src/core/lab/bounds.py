"""
Expectation Bounds Lab
======================

Monte-Carlo checks of how far E[h(x)] can drift from h(E[x]) when Gaussian
activations pass through piece-wise linear units.

ReLU, x ~ N(mu, sigma^2):
    E[ReLU(x)] = mu * Phi(mu / sigma) + sigma * phi(mu / sigma)
    0 <= E[ReLU(x)] - ReLU(mu) <= sigma / sqrt(2 pi), with equality at mu = 0

Maxout, h(x) = max_i (w_i . x + b_i) with independent Gaussian inputs,
branch means mu_i and variances sigma_i^2:
    max_i mu_i <= E[h(x)] <= log k + max_i (mu_i + sigma_i^2 / 2)
    |E[h(x)] - h(E[x])| <= log k + max_i sigma_i^2 / 2

All comparisons allow ``tolerance`` standard errors of Monte-Carlo slack.
"""

from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from src.config.logging import get_logger
from src.core.lab.reporting import LabError
from src.core.nn.architectures import make_rng
from src.models.schemas import BoundCheck

logger = get_logger(__name__)

Branch = Tuple[np.ndarray, float]

# draws per chunk when sampling maxout inputs
_CHUNK = 100_000


def _summary(values: np.ndarray) -> Tuple[float, float]:
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return estimate, std_error


def relu_expectation(mu: float, sigma: float) -> float:
    """Closed-form E[ReLU(x)] for x ~ N(mu, sigma^2)."""
    t = mu / sigma
    return float(mu * stats.norm.cdf(t) + sigma * stats.norm.pdf(t))


def relu_bound_check(
    mu: float, sigma: float, samples: int = 1_000_000, seed: int = 0, tolerance: float = 4.0
) -> BoundCheck:
    """Monte-Carlo E[ReLU(x)] against the closed form and the Jensen gap budget.

    Raises:
        LabError: If sigma <= 0 or fewer than 2 samples are requested
    """
    if sigma <= 0:
        raise LabError(f"sigma must be positive, got {sigma}")
    if samples < 2:
        raise LabError(f"need at least 2 samples, got {samples}")
    rng = make_rng(seed)
    draws = np.maximum(mu + sigma * rng.standard_normal(samples), 0.0)
    estimate, std_error = _summary(draws)
    at_mean = max(mu, 0.0)
    exact = relu_expectation(mu, sigma)
    slack = tolerance * std_error + 1e-12
    lower, upper = at_mean, at_mean + sigma / np.sqrt(2.0 * np.pi)
    passed = (
        abs(estimate - exact) <= slack and lower - slack <= estimate <= upper + slack
    )
    check = BoundCheck(
        name="relu",
        mus=[float(mu)],
        sigmas=[float(sigma)],
        estimate=estimate,
        std_error=std_error,
        at_mean=at_mean,
        gap=abs(estimate - at_mean),
        lower=lower,
        upper=float(upper),
        expected_gap=exact - at_mean,
        samples=samples,
        passed=bool(passed),
    )
    logger.info("ReLU bound checked", mu=mu, sigma=sigma, gap=check.gap, passed=check.passed)
    return check


def branch_moments(
    branches: Sequence[Branch], input_mean: np.ndarray, input_std: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Means and standard deviations of w_i . x + b_i."""
    weights = np.stack([np.asarray(w, dtype=np.float64).reshape(-1) for w, _ in branches])
    biases = np.array([float(b) for _, b in branches])
    mus = weights @ input_mean + biases
    sigmas = np.sqrt((weights**2) @ (input_std**2))
    return mus, sigmas


def maxout_bound_check(
    branches: Sequence[Branch],
    input_mean: Sequence[float],
    input_std: Sequence[float],
    samples: int = 100_000,
    seed: int = 0,
    tolerance: float = 4.0,
) -> BoundCheck:
    """Monte-Carlo E[max_i (w_i . x + b_i)] for independent Gaussian inputs.

    Args:
        branches: (w_i, b_i) pairs; every w_i has the input dimension
        input_mean: Per-coordinate input means
        input_std: Per-coordinate input standard deviations
        samples: Monte-Carlo draws
        seed: Random stream seed

    Raises:
        LabError: With no branches, mismatched dimensions or negative stds
    """
    if len(branches) == 0:
        raise LabError("maxout needs at least one branch (k = 0)")
    if samples < 2:
        raise LabError(f"need at least 2 samples, got {samples}")
    mean = np.asarray(input_mean, dtype=np.float64).reshape(-1)
    std = np.asarray(input_std, dtype=np.float64).reshape(-1)
    if mean.shape != std.shape:
        raise LabError(f"input mean {mean.shape} and std {std.shape} differ")
    if np.any(std < 0):
        raise LabError("input standard deviations must be non-negative")
    if any(np.asarray(w).size != mean.size for w, _ in branches):
        raise LabError(f"every branch weight must have {mean.size} entries")

    k = len(branches)
    weights = np.stack([np.asarray(w, dtype=np.float64).reshape(-1) for w, _ in branches])
    biases = np.array([float(b) for _, b in branches])
    mus, sigmas = branch_moments(branches, mean, std)

    rng = make_rng(seed)
    values = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        n = min(_CHUNK, samples - start)
        x = mean + std * rng.standard_normal((n, mean.size))
        values[start : start + n] = np.max(x @ weights.T + biases, axis=1)
    estimate, std_error = _summary(values)

    at_mean = float(np.max(mus))
    lower = at_mean
    upper = float(np.log(k) + np.max(mus + sigmas**2 / 2.0))
    budget = float(np.log(k) + 0.5 * np.max(sigmas**2))
    gap = abs(estimate - at_mean)
    slack = tolerance * std_error + 1e-12
    passed = lower - slack <= estimate <= upper + slack and gap <= budget + slack
    check = BoundCheck(
        name=f"maxout-k{k}",
        mus=[float(m) for m in mus],
        sigmas=[float(s) for s in sigmas],
        estimate=estimate,
        std_error=std_error,
        at_mean=at_mean,
        gap=gap,
        lower=lower,
        upper=upper,
        expected_gap=budget,
        samples=samples,
        passed=bool(passed),
    )
    logger.info("Maxout bound checked", branches=k, gap=gap, budget=budget, passed=check.passed)
    return check


def random_branches(
    rng: np.random.Generator, count: int, dim: int, scale: float = 1.0
) -> List[Branch]:
    """``count`` random maxout branches with N(0, scale^2) weights and biases."""
    if count < 1 or dim < 1:
        raise LabError(f"need count >= 1 and dim >= 1, got {count}, {dim}")
    return [
        (scale * rng.standard_normal(dim), float(scale * rng.standard_normal()))
        for _ in range(count)
    ]
