"""Sealed abstract-virology laboratory over a toy language."""

__version__ = "0.1.0"
