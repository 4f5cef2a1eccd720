"""Renormalized mean values for infinite-volume measures."""
__version__ = "0.1.0"
