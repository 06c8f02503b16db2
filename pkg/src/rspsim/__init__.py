"""Simulation of deterministic remote state preparation with an interferometric POVM module."""

__version__ = "0.1.0"
