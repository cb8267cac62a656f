"""Incentive-compatible bandit algorithms and benchmark harness."""

__version__ = "0.1.0"
