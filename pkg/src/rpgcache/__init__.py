"""Symbolic solving of reactive program games with attractor caches."""

__version__ = "0.1.0"
