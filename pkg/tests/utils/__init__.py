"""
Test Utils Package
==================

Builders, numerical helpers and assertions shared by the evidence-lens
test suites.
"""
