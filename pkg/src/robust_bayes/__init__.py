"""Bayesian robust regression when p/n -> kappa in (0, 1)."""

__version__ = "0.1.0"
