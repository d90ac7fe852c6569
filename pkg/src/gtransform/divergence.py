"""Information divergences along exponential-tilt curves, and two-bin statistics.

Every divergence is ``D(P^x || P_0)`` in nats, where ``P^x`` is the member of
the tilted family with mean ``x``. They are written through :func:`kl_term`
so that values near the mean keep full relative precision. ``0 * log 0``
is taken as 0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .specfun import ConvergenceError, DomainError, kl_term

__all__ = [
    "TwoBinSample",
    "chi2_stat",
    "div_binomial",
    "div_gamma_mean",
    "div_gamma_pair",
    "div_geometric",
    "div_poisson",
    "div_poisson_binomial",
    "f_divergence",
    "g2_stat",
]

TILT_LIMIT = 700.0


def div_binomial(m: float, n: int, p: float) -> float:
    if not 0 <= m <= n:
        raise DomainError(f"binomial outcome {m} outside [0, {n}]")
    if not 0.0 < p < 1.0:
        raise DomainError(f"binomial p must lie in (0, 1), got {p}")
    if m == 0:
        return -n * math.log1p(-p)
    if m == n:
        return -n * math.log(p)
    return kl_term(m, n * p) + kl_term(n - m, n * (1.0 - p))


def div_poisson(m: float, lam: float) -> float:
    if m < 0:
        raise DomainError(f"poisson outcome must be nonnegative, got {m}")
    if lam <= 0:
        raise DomainError(f"poisson mean must be positive, got {lam}")
    return kl_term(m, lam)


def div_gamma_pair(m: float, theta1: float, theta2: float) -> float:
    """``D(Gamma(m, theta1) || Gamma(m, theta2)) = m (r - 1 - ln r)`` with ``r = theta1/theta2``."""
    if m <= 0 or theta1 <= 0 or theta2 <= 0:
        raise DomainError("gamma divergence needs positive shape and scales")
    return kl_term(m, m * (theta1 / theta2))


def div_gamma_mean(t: float, m: float) -> float:
    """Divergence from ``Gamma(m, t/m)`` to ``Gamma(m, 1)``: ``t - m - m ln(t/m)``."""
    if m <= 0:
        raise DomainError(f"gamma shape must be positive, got {m}")
    if t < 0:
        raise DomainError(f"gamma outcome must be nonnegative, got {t}")
    if t == 0:
        return math.inf
    return kl_term(m, t)


def div_geometric(m: float, mu0: float) -> float:
    """``m ln(m/mu0) - (1+m) ln((1+m)/(1+mu0))`` for geometric laws on {0, 1, ...}."""
    if m < 0:
        raise DomainError(f"geometric outcome must be nonnegative, got {m}")
    if mu0 <= 0:
        raise DomainError(f"geometric mean must be positive, got {mu0}")
    if m == 0:
        return math.log1p(mu0)
    return max(kl_term(m, mu0) - kl_term(1.0 + m, 1.0 + mu0), 0.0)


def _log_partition(beta: float, logit: np.ndarray, log_q: np.ndarray) -> float:
    # sum log(1 - p + p e^beta) = sum [log(1 - p) + softplus(logit p + beta)]
    return math.fsum(log_q + np.logaddexp(0.0, logit + beta))


def _tilted_mean(beta: float, logit: np.ndarray) -> float:
    s = logit + beta
    e = np.exp(-np.abs(s))
    return math.fsum(np.where(s >= 0, 1.0 / (1.0 + e), e / (1.0 + e)))


def _tilted_var(beta: float, logit: np.ndarray) -> float:
    s = logit + beta
    e = np.exp(-np.abs(s))
    return float(np.sum(e / (1.0 + e) ** 2))


def div_poisson_binomial(x: float, probs: Sequence[float], tol: float = 1e-14, max_iter: int = 200) -> float:
    """Divergence for a sum of independent Bernoulli variables.

    The tilt ``beta`` solving ``sum p e^b / (1 - p + p e^b) = x`` is found
    by Newton steps kept inside a shrinking bisection bracket.
    """
    probs = np.asarray(probs, dtype=float)
    n = probs.size
    if n == 0:
        raise DomainError("need at least one probability")
    if np.any((probs <= 0) | (probs >= 1)):
        raise DomainError("probabilities must lie in (0, 1)")
    if not 0 <= x <= n:
        raise DomainError(f"outcome {x} outside [0, {n}]")
    log_q = np.log1p(-probs)
    if x == 0:
        return -math.fsum(log_q)
    if x == n:
        return -math.fsum(np.log(probs))
    logit = np.log(probs) - log_q

    lo, hi = -TILT_LIMIT, TILT_LIMIT
    beta = 0.0
    scale = max(1.0, x)
    for _ in range(max_iter):
        resid = _tilted_mean(beta, logit) - x
        if abs(resid) <= tol * scale:
            break
        if resid > 0:
            hi = beta
        else:
            lo = beta
        var = _tilted_var(beta, logit)
        step = beta - resid / var if var > 0 else math.nan
        beta = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(beta)):
            break
    else:
        raise ConvergenceError(f"tilt for outcome {x} did not converge", beta)
    return max(beta * x - _log_partition(beta, logit, log_q), 0.0)


@dataclass(frozen=True)
class TwoBinSample:
    """Counts in two bins and the null probability ``q`` of the first bin."""

    x1: int
    x2: int
    q: float

    def __post_init__(self):
        if self.x1 < 0 or self.x2 < 0 or self.x1 + self.x2 < 1:
            raise DomainError("two-bin counts must be nonnegative with a positive total")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"null probability must lie in (0, 1), got {self.q}")

    @property
    def n(self) -> int:
        return self.x1 + self.x2


def chi2_stat(s: TwoBinSample) -> float:
    """Pearson statistic ``sum (X_j - n q_j)^2 / (n q_j)`` over the two bins."""
    e1 = s.n * s.q
    e2 = s.n * (1.0 - s.q)
    return (s.x1 - e1) ** 2 / e1 + (s.x2 - e2) ** 2 / e2


def g2_stat(s: TwoBinSample) -> float:
    """Likelihood-ratio statistic, twice the binomial divergence."""
    return 2.0 * div_binomial(s.x1, s.n, s.q)


def f_divergence(p: Sequence[float], q: Sequence[float], f: Callable[[float], float]) -> float:
    """``sum_j q_j f(p_j / q_j)`` for probability vectors ``p`` and ``q > 0``."""
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    if len(p) != len(q) or not p:
        raise DomainError("p and q must be non-empty and of equal length")
    if any(v <= 0 for v in q) or any(v < 0 for v in p):
        raise DomainError("q must be strictly positive and p nonnegative")
    if abs(math.fsum(p) - 1.0) > 1e-12 or abs(math.fsum(q) - 1.0) > 1e-12:
        raise DomainError("p and q must each sum to 1")
    return math.fsum(qj * f(pj / qj) for pj, qj in zip(p, q))
