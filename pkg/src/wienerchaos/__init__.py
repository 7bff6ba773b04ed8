"""Wiener chaos solver for linear parabolic SPDEs on periodic grids."""

__version__ = "0.1.0"
