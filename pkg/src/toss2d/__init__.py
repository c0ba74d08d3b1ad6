"""Time-frequency "cards tossing" interference model for random-access LPWANs."""

__version__ = "0.1.0"
