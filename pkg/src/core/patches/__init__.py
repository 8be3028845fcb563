"""
Patch Models
============

Gaussian window distributions used to marginalize image patches.

Components:
- gaussian: pooled l x l patch Gaussian, conditional window queries, marginals
- model_io: EVGM model files
"""
