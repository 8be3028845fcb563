"""
Approximation Lab
=================

Numerical checks of replacing an average of network outputs by the output at
the average input.

Components:
- mean_comparison: arithmetic vs normalized geometric mean, sample fluctuation
- bounds: ReLU and maxout expectation bounds
- activations: dense-layer activation statistics
- reporting: histograms and seeded CSV tables
"""
