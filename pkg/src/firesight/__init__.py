"""Wildfire situational-awareness and daily resource-recommendation pipeline."""

__version__ = "0.1.0"
