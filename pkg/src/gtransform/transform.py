"""Signed root of the tilt divergence, its Gamma inverse, Gaussian cells and tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import (
    Binomial,
    GammaShape,
    Geometric,
    Poisson,
    PoissonBinomial,
    _check_outcome,
    is_discrete,
)
from .divergence import (
    div_binomial,
    div_gamma_mean,
    div_geometric,
    div_poisson,
    div_poisson_binomial,
)
from .specfun import ConvergenceError, DomainError, kl_term, normal_interval

__all__ = [
    "BoundPoint",
    "GValue",
    "chernoff_bound",
    "divergence",
    "g_inverse_gamma",
    "g_transform",
    "g_value",
    "gaussian_cell",
    "scaled_tg_prime",
    "tg_prime_monotonicity_witness",
]


def divergence(spec, m) -> float:
    """Divergence ``D(P^m || P_0)`` from the family member with mean ``m`` to ``spec``."""
    if isinstance(spec, Binomial):
        return div_binomial(m, spec.n, spec.p)
    if isinstance(spec, Poisson):
        return div_poisson(m, spec.lam)
    if isinstance(spec, GammaShape):
        return div_gamma_mean(m, spec.m)
    if isinstance(spec, Geometric):
        return div_geometric(m, spec.mu)
    if isinstance(spec, PoissonBinomial):
        return div_poisson_binomial(m, spec.probs)
    raise TypeError(f"unsupported family {spec!r}")


def g_value(spec, m) -> float:
    """The signed root alone; ``m`` is not checked against the support."""
    d = divergence(spec, m)
    z = math.sqrt(2.0 * d)
    return -z if m < spec.mean else z


@dataclass(frozen=True)
class GValue:
    z: float
    div_nats: float
    outcome: float
    spec: object


def g_transform(spec, m) -> GValue:
    """Signed root ``+-sqrt(2 D)``, negative strictly below the mean.

    At the mean itself the divergence is zero and the ``+`` branch is used.
    """
    m = _check_outcome(spec, m)
    d = divergence(spec, m)
    z = math.sqrt(2.0 * d)
    if m < spec.mean:
        z = -z
    return GValue(z=z, div_nats=d, outcome=m, spec=spec)


# log of the smallest subnormal and of the largest finite double
_LOG_TINY = math.log(5e-324)
_LOG_HUGE = math.log(1.7976931348623157e308)


def g_inverse_gamma(m: float, z: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """The outcome ``t`` of ``GammaShape(m)`` whose signed root equals ``z``."""
    if not math.isfinite(z):
        raise DomainError(f"z must be finite, got {z}")
    if m <= 0:
        raise DomainError(f"shape must be positive, got {m}")
    if z == 0:
        return float(m)
    spec = GammaShape(m)

    # Work in s = ln t: the lower branch can put the root hundreds of orders
    # of magnitude below m, and G is far closer to linear in s than in t.
    def resid(s):
        return g_value(spec, math.exp(s)) - z

    s_mean = math.log(m)
    if z < 0:
        lo, hi = s_mean, s_mean
        step = 1.0
        while True:
            lo = max(lo - step, _LOG_TINY)
            step *= 2.0
            if resid(lo) <= 0:
                break
            if lo == _LOG_TINY:
                raise ConvergenceError(f"root for z={z} below the smallest double for shape {m}", 0.0)
    else:
        lo, hi = s_mean, s_mean
        step = 1.0
        while True:
            hi = min(hi + step, _LOG_HUGE)
            step *= 2.0
            if resid(hi) >= 0:
                break
            if hi == _LOG_HUGE:
                raise ConvergenceError(f"no bracket for z={z} above the mean of shape {m}", math.inf)

    s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = resid(s)
        if abs(r) <= tol:
            return math.exp(s)
        if r < 0:
            lo = s
        else:
            hi = s
        g = r + z
        t = math.exp(s)
        # dG/ds = t dG/dt = (t - m) / G
        slope = (t - m) / g if g != 0 else math.sqrt(m)
        step = s - r / slope if slope > 0 else math.nan
        s = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-16 * max(1.0, abs(s)):
            return math.exp(s)
    raise ConvergenceError(f"inverse signed root did not converge for m={m}, z={z}", math.exp(s))


def _g_extended(spec, m) -> float:
    lo, hi = spec.support
    if m < lo:
        return -math.inf
    if hi is not None and m > hi:
        return math.inf
    return g_value(spec, m)


def gaussian_cell(spec, m: int) -> tuple[float, float]:
    """``(Phi(G(m)) - Phi(G(m-1)), Phi(G(m+1)) - Phi(G(m)))`` with ``G`` set to
    ``-inf`` below the support and ``+inf`` above it."""
    if not is_discrete(spec):
        raise DomainError("gaussian cells are defined for discrete families only")
    m = _check_outcome(spec, m)
    g_prev, g, g_next = _g_extended(spec, m - 1), g_value(spec, m), _g_extended(spec, m + 1)
    return normal_interval(g_prev, g), normal_interval(g, g_next)


@dataclass(frozen=True)
class BoundPoint:
    outcome: float
    side: str
    bound: float
    div_nats: float


def chernoff_bound(spec, m) -> list[BoundPoint]:
    """``exp(-D)`` bounds: on ``P(X <= m)`` when ``m <= mean`` and on
    ``P(X >= m)`` when ``m >= mean``. Both sides are returned at the mean."""
    m = _check_outcome(spec, m)
    d = divergence(spec, m)
    bound = math.exp(-d)
    out = []
    if m <= spec.mean:
        out.append(BoundPoint(m, "lower", bound, d))
    if m >= spec.mean:
        out.append(BoundPoint(m, "upper", bound, d))
    return out


def tg_prime_monotonicity_witness(u: float) -> float:
    """``u - 2 ln u - 1/u``: negative below 1, positive above."""
    if u <= 0:
        raise DomainError(f"u must be positive, got {u}")
    return u - 2.0 * math.log(u) - 1.0 / u


def scaled_tg_prime(u: float) -> float:
    """``t G'(t) / sqrt(m)`` for the Gamma family at ``u = t/m``:
    ``|u - 1| / sqrt(2 (u - 1 - ln u))``, equal to 1 at ``u = 1``.

    ``G`` has the sign of ``u - 1``, so ``t G'(t) = (t - m) / G`` is positive
    on both branches."""
    if u <= 0:
        raise DomainError(f"u must be positive, got {u}")
    if u == 1:
        return 1.0
    return abs(u - 1.0) / math.sqrt(2.0 * kl_term(1.0, u))
