"""Extrapolated quasi-Monte Carlo with truncated higher order digital nets."""

__version__ = "0.1.0"
