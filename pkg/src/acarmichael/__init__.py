"""acarmichael - verify, enumerate and construct a-Carmichael numbers."""

__version__ = "1.0.0"
