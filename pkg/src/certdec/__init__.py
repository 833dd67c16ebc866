"""Certified statistical decisions: minimax recommendations with P- and E-certificates."""

__version__ = "0.1.0"
