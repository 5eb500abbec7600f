"""Prestrained thin-sheet plate reduction and verification."""

__version__ = "0.1.0"
