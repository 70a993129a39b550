"""Numerical laboratory for theta functions, KP and commuting operators."""

__version__ = "0.1.0"
