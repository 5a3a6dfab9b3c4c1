"""Numerical laboratory for degenerate p-Laplace operators on weighted
Riemannian structures (Grushin and monomial weights)."""

__version__ = "0.1.0"
