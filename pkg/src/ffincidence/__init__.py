"""Exact counting of corners, rectangles, incidences and additive energy over F_p."""

__version__ = "0.1.0"
