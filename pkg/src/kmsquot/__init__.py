"""Explicit finite quotients of a rank-3 hyperbolic unipotent group and their coset complexes."""

__version__ = "0.1.0"
