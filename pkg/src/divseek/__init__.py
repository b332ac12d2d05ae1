"""Divergence-theorem extremum seeking: dither geometry, ball averages, simulation and checks."""

__version__ = "0.1.0"
