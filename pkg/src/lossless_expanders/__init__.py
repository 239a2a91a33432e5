"""Lossless bipartite expanders from a spectral expander and a small gadget."""

__version__ = "0.1.0"
