"""Frame-compatible multiview video coding with tile-based intra block copy."""

__version__ = "0.1.0"
