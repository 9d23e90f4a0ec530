"""Quasimorphism-based orders on the circle group and the cover of PSL(2, R)."""

__version__ = "0.1.0"
