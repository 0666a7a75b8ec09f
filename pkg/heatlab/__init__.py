"""Numerical laboratory for the large-time behavior of two-phase heat conductors."""

__version__ = "0.1.0"
