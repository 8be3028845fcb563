"""
Rendering Module
================

Evidence maps as images.

Components:
- heatmap: red/blue colormap, grayscale input, overlays
- ppm: bit-exact P6 writer and parser
- panels: PNG export and figure-style panels via Pillow
"""
