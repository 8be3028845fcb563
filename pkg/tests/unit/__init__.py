"""
Unit Tests Package
==================

Isolated tests of the network engine, window models, attribution methods,
lab experiments and rendering.
"""
