"""Stabilizer Renyi entropies, mutual magic and magic capacity toolkit."""

__version__ = "0.1.0"
