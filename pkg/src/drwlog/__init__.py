"""Finite-precision verification of dlog descriptions of twisted logarithmic de Rham-Witt forms."""

__version__ = "0.1.0"
