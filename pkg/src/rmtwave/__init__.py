"""Numerical laboratory for a random-matrix nonlinear wave model and its kinetic limit."""

__version__ = "0.1.0"
