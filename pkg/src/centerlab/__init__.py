"""Numerical toolkit for centralizers of flows and vector fields."""

__version__ = "0.1.0"
