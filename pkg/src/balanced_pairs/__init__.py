"""Balanced pairs of group maps, truncations and almost projections."""

__version__ = "0.1.0"
