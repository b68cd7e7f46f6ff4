"""Numerical checks of Lee-Yang edge singularities: zeros, Jensen slopes,
edge amplitudes, monodromy and Kac-weight exponents."""

__version__ = "0.1.0"
