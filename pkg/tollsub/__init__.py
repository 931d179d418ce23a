"""Tolls vs subsidies in non-atomic congestion games."""

__version__ = "1.0.0"
