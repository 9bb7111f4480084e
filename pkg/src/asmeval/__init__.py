"""Automatic syntactic and semantic assessment of generated IA-32 assembly."""

__version__ = "0.1.0"
