"""
CLI
===

The ``evlens`` command: training, window-model fitting, explanations,
benchmarks and the approximation experiments.
"""
