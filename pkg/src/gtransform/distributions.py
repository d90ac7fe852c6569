"""Exact pmf, CDF and survival for the five families.

Each family is a frozen dataclass. The module-level functions
:func:`log_pmf`, :func:`pmf`, :func:`cdf`, :func:`survival` and :func:`mean`
dispatch on it. ``survival(m)`` is ``P(X >= m)`` and ``cdf(m)`` is
``P(X <= m)``, so for the discrete families ``cdf(m) + survival(m + 1) == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .specfun import (
    DomainError,
    kl_term,
    reg_beta_pair,
    reg_gamma_pair,
    stirling_remainder,
)

__all__ = [
    "Binomial",
    "FamilySpec",
    "GammaShape",
    "Geometric",
    "Poisson",
    "PoissonBinomial",
    "cdf",
    "is_discrete",
    "log_pmf",
    "mean",
    "pmf",
    "survival",
    "variance",
]

POISSON_BINOMIAL_MAX = 10_000


def _check_prob(name, p):
    if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


def _check_positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise DomainError(f"{name} must be a positive finite number, got {v!r}")


def _as_count(m) -> int:
    if isinstance(m, bool):
        raise DomainError(f"outcome must be an integer, got {m!r}")
    if isinstance(m, (int, np.integer)):
        return int(m)
    if isinstance(m, float) and m.is_integer():
        return int(m)
    raise DomainError(f"outcome must be an integer, got {m!r}")


@dataclass(frozen=True)
class Binomial:
    n: int
    p: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError(f"binomial n must be a positive integer, got {self.n!r}")
        _check_prob("binomial p", self.p)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def support(self) -> tuple[int, int | None]:
        return 0, self.n

    def label(self) -> str:
        return f"binomial({self.n},{self.p!r})"

    def log_pmf(self, m) -> float:
        m = _as_count(m)
        n, p, q = self.n, self.p, self.q
        if not 0 <= m <= n:
            raise DomainError(f"{m} is outside the support 0..{n}")
        if m == 0:
            return n * math.log1p(-p)
        if m == n:
            return n * math.log(p)
        lc = (
            stirling_remainder(n)
            - stirling_remainder(m)
            - stirling_remainder(n - m)
            - kl_term(m, n * p)
            - kl_term(n - m, n * q)
        )
        return lc + 0.5 * math.log(n / (2.0 * math.pi * m * (n - m)))

    def tails(self, m: int) -> tuple[float, float]:
        """``(P(X <= m), P(X > m))`` for any integer ``m``."""
        n = self.n
        if m < 0:
            return 0.0, 1.0
        if m >= n:
            return 1.0, 0.0
        if m == 0:
            e = n * math.log1p(-self.p)
            return math.exp(e), -math.expm1(e)
        if m == n - 1:
            e = n * math.log(self.p)
            return -math.expm1(e), math.exp(e)
        # P(X <= m) = I_q(n - m, m + 1)
        return reg_beta_pair(self.q, n - m, m + 1, y=self.p)

    @property
    def mean(self) -> float:
        return self.n * self.p

    @property
    def variance(self) -> float:
        return self.n * self.p * self.q


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        _check_positive("poisson mean", self.lam)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def support(self) -> tuple[int, int | None]:
        return 0, None

    def label(self) -> str:
        return f"poisson({self.lam!r})"

    def log_pmf(self, m) -> float:
        m = _as_count(m)
        if m < 0:
            raise DomainError(f"{m} is outside the support 0, 1, 2, ...")
        if m == 0:
            return -self.lam
        return -stirling_remainder(m) - kl_term(m, self.lam) - 0.5 * math.log(2.0 * math.pi * m)

    def tails(self, m: int) -> tuple[float, float]:
        if m < 0:
            return 0.0, 1.0
        if m == 0:
            return math.exp(-self.lam), -math.expm1(-self.lam)
        # P(X <= m) = Q(m + 1, lam), P(X > m) = P(m + 1, lam)
        lower, upper = reg_gamma_pair(m + 1.0, self.lam)
        return upper, lower

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return self.lam


@dataclass(frozen=True)
class GammaShape:
    """Gamma distribution with shape ``m`` and unit scale."""

    m: float

    def __post_init__(self):
        _check_positive("gamma shape", self.m)
        object.__setattr__(self, "m", float(self.m))

    def label(self) -> str:
        return f"gamma({self.m!r})"

    def log_pmf(self, t) -> float:
        """Log density at ``t >= 0``."""
        a = self.m
        if not (isinstance(t, (int, float)) and t >= 0 and math.isfinite(t)):
            raise DomainError(f"gamma outcome must be a finite nonnegative real, got {t!r}")
        if t == 0:
            if a == 1:
                return 0.0
            return -math.inf if a > 1 else math.inf
        return math.log(a / t) - kl_term(a, t) - stirling_remainder(a) - 0.5 * math.log(2.0 * math.pi * a)

    def tails(self, t: float) -> tuple[float, float]:
        if t <= 0:
            return 0.0, 1.0
        return reg_gamma_pair(self.m, t)

    @property
    def mean(self) -> float:
        return self.m

    @property
    def variance(self) -> float:
        return self.m


@dataclass(frozen=True)
class Geometric:
    """Geometric distribution on ``{0, 1, 2, ...}`` parametrized by its mean."""

    mu: float

    def __post_init__(self):
        _check_positive("geometric mean", self.mu)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def support(self) -> tuple[int, int | None]:
        return 0, None

    def label(self) -> str:
        return f"geometric({self.mu!r})"

    @property
    def _log_ratio(self) -> float:
        # log(mu / (1 + mu))
        return -math.log1p(1.0 / self.mu)

    def log_pmf(self, m) -> float:
        m = _as_count(m)
        if m < 0:
            raise DomainError(f"{m} is outside the support 0, 1, 2, ...")
        return -math.log1p(self.mu) + m * self._log_ratio

    def tails(self, m: int) -> tuple[float, float]:
        if m < 0:
            return 0.0, 1.0
        expo = (m + 1) * self._log_ratio
        return -math.expm1(expo), math.exp(expo)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def variance(self) -> float:
        return self.mu * (1.0 + self.mu)


@dataclass(frozen=True)
class PoissonBinomial:
    """Sum of independent Bernoulli variables with the given success probabilities."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise DomainError("poisson-binomial needs at least one probability")
        if len(probs) > POISSON_BINOMIAL_MAX:
            raise DomainError(f"poisson-binomial supports at most {POISSON_BINOMIAL_MAX} terms")
        for p in probs:
            _check_prob("poisson-binomial probability", p)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> tuple[int, int | None]:
        return 0, self.n

    def label(self) -> str:
        return "poisson-binomial(" + ";".join(repr(p) for p in self.probs) + ")"

    @cached_property
    def _pmf(self) -> np.ndarray:
        # All terms are nonnegative, so the recursion has no cancellation.
        out = np.zeros(self.n + 1)
        out[0] = 1.0
        for k, p in enumerate(self.probs, start=1):
            head = out[:k] * p
            out[:k] *= 1.0 - p
            out[1 : k + 1] += head
        out.setflags(write=False)
        return out

    @cached_property
    def _cdf(self) -> np.ndarray:
        out = np.cumsum(self._pmf)
        out.setflags(write=False)
        return out

    @cached_property
    def _sf(self) -> np.ndarray:
        # _sf[m] = P(X >= m); summed from the top so small tails stay accurate.
        out = np.cumsum(self._pmf[::-1])[::-1].copy()
        out.setflags(write=False)
        return out

    def log_pmf(self, m) -> float:
        m = _as_count(m)
        if not 0 <= m <= self.n:
            raise DomainError(f"{m} is outside the support 0..{self.n}")
        value = self._pmf[m]
        return math.log(value) if value > 0 else -math.inf

    def tails(self, m: int) -> tuple[float, float]:
        if m < 0:
            return 0.0, 1.0
        if m >= self.n:
            return 1.0, 0.0
        return float(self._cdf[m]), float(self._sf[m + 1])

    @property
    def mean(self) -> float:
        return math.fsum(self.probs)

    @property
    def variance(self) -> float:
        return math.fsum(p * (1.0 - p) for p in self.probs)


FamilySpec = Binomial | Poisson | GammaShape | Geometric | PoissonBinomial
DISCRETE = (Binomial, Poisson, Geometric, PoissonBinomial)


def is_discrete(spec) -> bool:
    return isinstance(spec, DISCRETE)


def _check_outcome(spec, m):
    if isinstance(spec, GammaShape):
        if not (isinstance(m, (int, float)) and math.isfinite(m) and m >= 0):
            raise DomainError(f"gamma outcome must be a finite nonnegative real, got {m!r}")
        return float(m)
    m = _as_count(m)
    lo, hi = spec.support
    if m < lo or (hi is not None and m > hi):
        raise DomainError(f"{m} is outside the support of {spec.label()}")
    return m


def log_pmf(spec, m) -> float:
    """Log probability mass (or log density for :class:`GammaShape`)."""
    return spec.log_pmf(m)


def pmf(spec, m) -> float:
    return math.exp(spec.log_pmf(m))


def cdf(spec, m) -> float:
    """``P(X <= m)``."""
    m = _check_outcome(spec, m)
    return spec.tails(m)[0]


def survival(spec, m) -> float:
    """``P(X >= m)``."""
    m = _check_outcome(spec, m)
    if isinstance(spec, GammaShape):
        return spec.tails(m)[1]
    return spec.tails(m - 1)[1]


def mean(spec) -> float:
    return spec.mean


def variance(spec) -> float:
    return spec.variance
