"""Proactive personal assistant runtime: cognition forest, execution agent,
supervising kernel, privacy gate, and gateway service."""

__version__ = "0.1.0"
