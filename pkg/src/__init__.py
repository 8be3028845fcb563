"""
evidence-lens
=============

Explains a CNN classifier's decisions by marginalizing image patches:
sampling-based prediction difference analysis, its conditional-mean
reformulation, a first-order gradient variant, and the experiments that
measure how good the approximation is.
"""

__version__ = "1.0.0"
__author__ = "evidence-lens developers"
