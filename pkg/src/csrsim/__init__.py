"""Coordinated spatial reuse simulator with hierarchical bandit scheduling."""

__version__ = "0.1.0"
