"""Verification and classification of self-similar solutions of 1-D conservation laws."""

__version__ = "0.1.0"
