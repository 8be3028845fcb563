"""
Core Logic
==========

Modules:
- nn: CNN engine, training and data ingestion
- patches: conditional and marginal patch models
- evidence: attribution algorithms producing evidence maps
- lab: numerical checks of the mean-approximation theory
- rendering: heatmaps, overlays and image files
"""
