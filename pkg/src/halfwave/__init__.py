"""Pseudospectral workbench for half-wave maps on periodic boxes."""

__version__ = "0.1.0"
