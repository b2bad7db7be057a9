"""Logging configuration."""
from gtn.logging.setup import JsonFormatter, configure_logging

__all__ = ["JsonFormatter", "configure_logging"]
