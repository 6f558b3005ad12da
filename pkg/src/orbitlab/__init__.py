"""Numerical tools for concentration of diagonal projections of matrix orbits."""

__version__ = "0.1.0"
