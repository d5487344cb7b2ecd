"""Exact and Monte-Carlo tools for learning theory on finite populations."""

__version__ = "0.1.0"
