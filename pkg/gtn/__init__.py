"""Gated transfer network micro-framework and experiment harness."""

__version__ = "0.1.0"
