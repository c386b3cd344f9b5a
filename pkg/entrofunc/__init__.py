"""Renyi entropy functional estimation with epsilon-coincidence U-statistics."""

__version__ = "0.1.0"
