"""
Test Package
============

Test suite for evidence-lens: unit, integration and performance tests.
"""
