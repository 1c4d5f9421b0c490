"""Cascade reconstruction and influence measurement on interaction graphs."""

__version__ = "0.1.0"
