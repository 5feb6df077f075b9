"""Exact sampling for stationary chains of infinite order on finite alphabets."""

__version__ = "0.1.0"
