"""Completely monotone weights on the subset lattice, the sum operator and its
inverse, structured weight families, and RKHS embedding / error transfer tools."""

__version__ = "0.1.0"
