"""Log-concave maximum likelihood estimation with tent functions."""

__version__ = "0.1.0"
