"""Simulation and max-linear extrapolation of max-stable processes."""

__version__ = "0.1.0"
