"""Density-matrix simulator and experiment harness for quantum reservoir processing."""

__version__ = "0.1.0"
