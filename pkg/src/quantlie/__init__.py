"""Exact quantization of Lie bialgebras and Poisson homogeneous spaces."""

__version__ = "0.1.0"
