"""Numerical laboratory for Lieb-Robinson light cones and their consequences."""

__version__ = "0.1.0"
