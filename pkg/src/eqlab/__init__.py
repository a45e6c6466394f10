"""Equivalence-query learning with symmetric counterexamples."""

__version__ = "0.1.0"
