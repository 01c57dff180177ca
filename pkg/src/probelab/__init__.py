"""Executable laboratory for local computation algorithms."""

__version__ = "0.1.0"
