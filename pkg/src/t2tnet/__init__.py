"""Simulation and analysis toolkit for multi-hop backscatter tag-to-tag networks."""

__version__ = "0.1.0"
