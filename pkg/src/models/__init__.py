"""
Data Models
===========

Pydantic models for run configuration, reports and experiment results.

Models:
- schemas: explanation/fit/train configs, run reports, lab result rows
"""
