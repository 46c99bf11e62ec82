"""Numerical laboratory for fractional smoothness in periodic L_p, 0 < p < inf."""

__version__ = "0.1.0"
