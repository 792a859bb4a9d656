"""Spectral simulation and analysis of the Talbot effect for the Kawahara equation."""

__version__ = "0.1.0"
