"""Exact desk-scale tools for top-down depth-3/4 parity lower-bound arguments."""

__version__ = "0.1.0"
