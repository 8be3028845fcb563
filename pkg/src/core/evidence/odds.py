"""
Log-odds helpers.
"""

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def log_odds(p: ArrayLike, eps: float = 1e-6) -> ArrayLike:
    """Base-2 log odds with p clamped to [eps, 1 - eps]."""
    clamped = np.clip(p, eps, 1.0 - eps)
    out = np.log2(clamped / (1.0 - clamped))
    if np.ndim(out) == 0:
        return float(out)
    return out  # type: ignore[no-any-return]


def weight_of_evidence(p_full: float, p_marginalized: ArrayLike, eps: float = 1e-6) -> ArrayLike:
    """log2 odds(c|x) - log2 odds(c|x without the window)."""
    return log_odds(p_full, eps) - log_odds(p_marginalized, eps)  # type: ignore[operator]
