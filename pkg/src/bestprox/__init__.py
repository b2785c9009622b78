"""Best proximity points of non-self maps under auxiliary functions."""

__version__ = "0.1.0"
