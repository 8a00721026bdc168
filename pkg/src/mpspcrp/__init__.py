"""Integrated stowage planning with restricted yard relocation."""

__version__ = "0.1.0"
