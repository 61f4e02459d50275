"""Symbolic-numeric Lie symmetry toolkit for 1D rotating shallow-water MHD."""

__version__ = "0.1.0"
