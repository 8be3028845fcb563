"""
Evidence Module
===============

Attribution algorithms producing per-pixel evidence maps.

Components:
- algorithms: original, efficient and sampled-mean prediction difference
  analysis, the gradient simplification and class saliency
- fillers: window replacement values from conditional or marginal models
- maps: EvidenceMap, window traversal, text grid format
- odds: clamped base-2 log odds
- passes: closed-form forward-pass accounting
- executor: order-preserving window worker pool
"""

from src.core.evidence.algorithms import (
    explain,
    pda_efficient,
    pda_gradient,
    pda_original,
    pda_sampled_mean,
    saliency_map,
)
from src.core.evidence.maps import EvidenceError, EvidenceMap, map_correlation
from src.core.evidence.odds import log_odds
from src.core.evidence.passes import count_forward_passes

__all__ = [
    "EvidenceError",
    "EvidenceMap",
    "count_forward_passes",
    "explain",
    "log_odds",
    "map_correlation",
    "pda_efficient",
    "pda_gradient",
    "pda_original",
    "pda_sampled_mean",
    "saliency_map",
]
