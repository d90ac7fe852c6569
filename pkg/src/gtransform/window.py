"""Scan windows of discrete laws and the step/identity crossing arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Binomial, Geometric, Poisson, PoissonBinomial, is_discrete
from .specfun import DomainError

DEFAULT_THRESHOLD = 1e-15
TIE = 1e-14


def _mode(spec) -> int:
    if isinstance(spec, Binomial):
        return min(int(math.floor((spec.n + 1) * spec.p)), spec.n)
    if isinstance(spec, Poisson):
        return int(math.floor(spec.lam))
    if isinstance(spec, Geometric):
        return 0
    if isinstance(spec, PoissonBinomial):
        return int(np.argmax(spec._pmf))
    raise DomainError(f"no scan window for {spec!r}")


def _neumaier_cumsum(values, start):
    out = np.empty(len(values))
    total, comp = start, 0.0
    for i, v in enumerate(values):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i] = total + comp
    return out


@dataclass
class WindowTable:
    """pmf and both tails on ``lo..hi``, the outcomes with pmf above a threshold.

    Tails are accumulated from anchors just outside the window (taken from the
    special functions) with compensated summation, the CDF from the left and
    the survival function from the right.
    """

    spec: object
    lo: int
    hi: int
    threshold: float
    pmf: np.ndarray
    cdf: np.ndarray  # P(M <= m)
    sf: np.ndarray  # P(M >= m)
    cdf_before: float  # P(M < lo)
    sf_after: float  # P(M > hi)

    @classmethod
    def build(cls, spec, threshold: float = DEFAULT_THRESHOLD) -> "WindowTable":
        if not is_discrete(spec):
            raise DomainError("scan windows need a discrete family")
        if not 0.0 < threshold < 1e-6:
            raise DomainError(f"threshold must lie in (0, 1e-6), got {threshold}")
        log_thr = math.log(threshold)
        s_lo, s_hi = spec.support
        mode = _mode(spec)
        lo = mode
        while lo > s_lo and spec.log_pmf(lo - 1) >= log_thr:
            lo -= 1
        hi = mode
        while (s_hi is None or hi < s_hi) and spec.log_pmf(hi + 1) >= log_thr:
            hi += 1
        pmf = np.array([math.exp(spec.log_pmf(m)) for m in range(lo, hi + 1)])
        cdf_before = spec.tails(lo - 1)[0]
        sf_after = spec.tails(hi)[1]
        cdf = _neumaier_cumsum(pmf, cdf_before)
        sf = _neumaier_cumsum(pmf[::-1], sf_after)[::-1].copy()
        return cls(spec, lo, hi, threshold, pmf, cdf, sf, cdf_before, sf_after)

    @property
    def outcomes(self) -> range:
        return range(self.lo, self.hi + 1)

    def pmf_at(self, m: int) -> float:
        if self.lo <= m <= self.hi:
            return float(self.pmf[m - self.lo])
        s_lo, s_hi = self.spec.support
        if m < s_lo or (s_hi is not None and m > s_hi):
            return 0.0
        return math.exp(self.spec.log_pmf(m))

    def cdf_at(self, m: int) -> float:
        """``P(M <= m)`` for any integer ``m``."""
        if m < self.lo:
            return self.cdf_before if m == self.lo - 1 else self.spec.tails(m)[0]
        if m > self.hi:
            return self.spec.tails(m)[0]
        return float(self.cdf[m - self.lo])

    def sf_at(self, m: int) -> float:
        """``P(M >= m)`` for any integer ``m``."""
        if m > self.hi:
            return self.sf_after if m == self.hi + 1 else self.spec.tails(m - 1)[1]
        if m < self.lo:
            return self.spec.tails(m - 1)[1]
        return float(self.sf[m - self.lo])


@dataclass(frozen=True)
class Crossing:
    """Where a level ``mid`` sits inside a step ``[lower, upper]``.

    Margins are taken in the complemented form when ``mid > 1/2`` so that
    upper-tail steps keep their relative precision. ``position`` is the
    crossing position ``(mid - lower) / (upper - lower)``.
    """

    margin_lower: float
    margin_upper: float
    scale_lower: float
    scale_upper: float

    @property
    def position(self) -> float:
        width = self.margin_lower + self.margin_upper
        return self.margin_lower / width if width > 0 else math.nan

    def verdict(self, which: str, tie: float = TIE) -> str:
        margin, scale = (
            (self.margin_lower, self.scale_lower) if which == "lower" else (self.margin_upper, self.scale_upper)
        )
        if abs(margin) <= tie * scale:
            return "indeterminate"
        return "ok" if margin > 0 else "violation"


def crossing(lower, upper, lower_c, upper_c, mid, mid_c) -> Crossing:
    if mid <= 0.5:
        return Crossing(mid - lower, upper - mid, max(mid, lower), max(upper, mid))
    return Crossing(lower_c - mid_c, mid_c - upper_c, max(lower_c, mid_c), max(mid_c, upper_c))
