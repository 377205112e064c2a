"""Slab-geometry discrete-ordinates transport with a moving-mesh DG discretization."""

__version__ = "0.1.0"
