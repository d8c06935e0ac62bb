"""Robust separated continuous linear programming for fluid processing networks."""

__version__ = "0.1.0"
