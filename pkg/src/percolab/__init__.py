"""Exact laboratory for conditional correlation inequalities in percolation-type models."""

__version__ = "0.1.0"
