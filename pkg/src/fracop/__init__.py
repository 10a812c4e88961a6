"""Contour-quadrature solvers for time-fractional evolution equations."""

__version__ = "0.1.0"
