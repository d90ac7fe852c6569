"""Signed likelihood-ratio roots of exponential families and exact tail checks."""

from .distributions import Binomial, GammaShape, Geometric, Poisson, PoissonBinomial
from .specfun import ConvergenceError, DomainError
from .transform import g_transform

__version__ = "0.1.0"

__all__ = [
    "Binomial",
    "ConvergenceError",
    "DomainError",
    "GammaShape",
    "Geometric",
    "Poisson",
    "PoissonBinomial",
    "g_transform",
]
