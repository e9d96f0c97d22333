"""Deterministic flapping-wing flight simulator and control library."""

__version__ = "0.1.0"
