"""Polynomial VCO metamodels, a behavioral charge-pump PLL and a DE sizing loop."""

__version__ = "0.1.0"
