"""Compressed positive atomic norm minimization for super-resolving positive point sources."""

__version__ = "0.3.0"
