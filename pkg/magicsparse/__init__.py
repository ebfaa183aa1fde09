"""Sparsified stabilizer decompositions of tensored magic states."""

__version__ = "1.0.0"
