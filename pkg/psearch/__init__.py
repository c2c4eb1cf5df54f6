"""Probabilistic physical search on general graphs"""

__version__ = "1.0.0"
