"""Viscoelastic wave propagation with certified finite propagation speed."""

__version__ = "0.1.0"
