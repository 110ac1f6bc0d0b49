"""Simulation and exact-computation lab for the random-to-random insertion shuffle."""

__version__ = "0.1.0"
