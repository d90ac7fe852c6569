"""Q-Q step tables against a Gaussian or chi-square(1) reference, and exp(-D) bound curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import is_discrete
from .specfun import DomainError, std_normal_cdf, std_normal_quantile
from .transform import divergence, g_value
from .window import DEFAULT_THRESHOLD, WindowTable, crossing

__all__ = [
    "BoundRow",
    "QQRow",
    "REFERENCES",
    "STATISTICS",
    "bound_curve",
    "qq_table",
    "reference_cdf",
    "reference_quantile",
    "statistic",
]

REFERENCES = ("gaussian", "chisq1")
STATISTICS = ("signed-g", "g2", "chi2")
MERGE_REL = 1e-12


def statistic(spec, m: int, name: str, signed: bool) -> float:
    """Value of the named statistic at outcome ``m``.

    With ``signed`` the Gaussian-scale version is returned: the signed root
    for ``signed-g`` and the Pearson residual for ``chi2``. Otherwise the
    two-sided value: ``G^2 = 2 D`` or the Pearson statistic.
    """
    if name == "chi2":
        resid = (m - spec.mean) / math.sqrt(spec.variance)
        return resid if signed else resid * resid
    if name == "signed-g" and signed:
        return g_value(spec, m)
    if name == "g2" and not signed:
        return 2.0 * divergence(spec, m)
    raise DomainError(f"statistic {name!r} does not pair with a {'gaussian' if signed else 'chisq1'} reference")


def reference_cdf(reference: str, x: float) -> tuple[float, float]:
    """``(F(x), 1 - F(x))`` for the reference law."""
    if reference == "gaussian":
        return std_normal_cdf(x), std_normal_cdf(-x)
    if reference == "chisq1":
        if x <= 0:
            return 0.0, 1.0
        tail = 2.0 * std_normal_cdf(-math.sqrt(x))
        return 1.0 - tail, tail
    raise DomainError(f"unknown reference {reference!r}")


def reference_quantile(reference: str, p: float, pc: float) -> float:
    """Quantile at level ``p`` given also its complement ``pc = 1 - p``."""
    if reference == "gaussian":
        if p <= 0:
            return -math.inf
        if pc <= 0:
            return math.inf
        return std_normal_quantile(p) if p <= 0.5 else -std_normal_quantile(pc)
    if reference == "chisq1":
        if p <= 0:
            return 0.0
        if pc <= 0:
            return math.inf
        return std_normal_quantile(0.5 * pc) ** 2
    raise DomainError(f"unknown reference {reference!r}")


@dataclass(frozen=True)
class QQRow:
    """One step of the Q-Q step function.

    The step sits at height ``stat_value`` over reference quantiles
    ``ref_quantile_left..ref_quantile_right`` (the quantiles at ``lower`` and
    ``upper``). ``p_cum`` is the reference CDF at the step height; the
    identity line crosses the step iff ``lower < p_cum < upper``.
    """

    outcomes: tuple[int, ...]
    stat_value: float
    p_cum: float
    p_cum_c: float
    lower: float
    upper: float
    lower_c: float
    upper_c: float
    ref_quantile_left: float
    ref_quantile_right: float
    crossing: float


def _row(reference, outcomes, s, lower, upper, lower_c, upper_c) -> QQRow:
    p, pc = reference_cdf(reference, s)
    r = crossing(lower, upper, lower_c, upper_c, p, pc).position
    return QQRow(
        outcomes=tuple(outcomes),
        stat_value=s,
        p_cum=p,
        p_cum_c=pc,
        lower=lower,
        upper=upper,
        lower_c=lower_c,
        upper_c=upper_c,
        ref_quantile_left=reference_quantile(reference, lower, lower_c),
        ref_quantile_right=reference_quantile(reference, upper, upper_c),
        crossing=r,
    )


def _signed_rows(table, reference, stat):
    rows = []
    for m in table.outcomes:
        s = statistic(table.spec, m, stat, signed=True)
        lower, upper = table.cdf_at(m - 1), table.cdf_at(m)
        lower_c, upper_c = table.sf_at(m), table.sf_at(m + 1)
        rows.append(_row(reference, (m,), s, lower, upper, lower_c, upper_c))
    return rows


def _centre(spec) -> int:
    lo, hi = spec.support
    c = max(lo, int(math.floor(spec.mean)))
    if hi is not None:
        c = min(c, hi)
    return c


def _level_interval(spec, fn, level, centre):
    """Outcomes ``[a, b]`` with ``fn(m) <= level``; ``fn`` is valley shaped.

    Returns ``None`` when no outcome qualifies.
    """
    s_lo, s_hi = spec.support
    cands = [centre] + ([centre + 1] if s_hi is None or centre + 1 <= s_hi else [])
    k = min(cands, key=fn)
    if fn(k) > level:
        return None
    # leftmost a in [s_lo, k]
    lo, hi = s_lo, k
    if fn(lo) <= level:
        a = lo
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if fn(mid) <= level:
                hi = mid
            else:
                lo = mid
        a = hi
    # rightmost b in [k, s_hi]
    lo = k
    if s_hi is None:
        step = 1
        while fn(k + step) <= level:
            lo = k + step
            step *= 2
        hi = k + step
    elif fn(s_hi) <= level:
        return a, s_hi
    else:
        hi = s_hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fn(mid) <= level:
            lo = mid
        else:
            hi = mid
    return a, lo


def _interval_probs(table, interval):
    """``(P(a <= M <= b), P(M < a) + P(M > b))``."""
    if interval is None:
        return 0.0, 1.0
    a, b = interval
    outside = table.cdf_at(a - 1) + table.sf_at(b + 1)
    return 1.0 - outside, outside


def _two_sided_rows(table, reference, stat):
    spec = table.spec
    cache = {}

    def fn(m):
        v = cache.get(m)
        if v is None:
            v = cache[m] = statistic(spec, m, stat, signed=False)
        return v

    atoms = sorted(((fn(m), m) for m in table.outcomes))
    merged = []
    for s, m in atoms:
        if merged and s - merged[-1][0] <= MERGE_REL * max(1.0, merged[-1][0]):
            merged[-1][1].append(m)
        else:
            merged.append((s, [m]))
    centre = _centre(spec)
    rows = []
    for s, ms in merged:
        tol = MERGE_REL * max(1.0, s)
        upper, upper_c = _interval_probs(table, _level_interval(spec, fn, s + tol, centre))
        below = _level_interval(spec, fn, s - tol, centre) if s - tol >= 0 else None
        lower, lower_c = _interval_probs(table, below)
        rows.append(_row(reference, sorted(ms), s, lower, upper, lower_c, upper_c))
    return rows


def qq_table(
    spec,
    reference: str = "gaussian",
    stat: str = "signed-g",
    threshold: float = DEFAULT_THRESHOLD,
) -> list[QQRow]:
    """Steps of the quantile transform between a discrete statistic and a reference law.

    A Gaussian reference pairs with ``signed-g`` or the signed Pearson
    residual (``chi2``); the chi-square(1) reference pairs with ``g2`` or
    ``chi2`` and folds the outcomes onto the distinct statistic values.
    """
    if not is_discrete(spec):
        raise DomainError("Q-Q tables need a discrete family")
    if reference not in REFERENCES:
        raise DomainError(f"reference must be one of {REFERENCES}, got {reference!r}")
    if stat not in STATISTICS:
        raise DomainError(f"statistic must be one of {STATISTICS}, got {stat!r}")
    if reference == "gaussian" and stat == "g2":
        raise DomainError("g2 is two-sided; use the chisq1 reference or signed-g")
    if reference == "chisq1" and stat == "signed-g":
        raise DomainError("signed-g is one-sided; use the gaussian reference or g2")
    table = WindowTable.build(spec, threshold)
    if reference == "gaussian":
        return _signed_rows(table, reference, stat)
    return _two_sided_rows(table, reference, stat)


@dataclass(frozen=True)
class BoundRow:
    outcome: int
    side: str
    exact_tail: float
    bound: float
    div_nats: float


def bound_curve(spec, threshold: float = DEFAULT_THRESHOLD, table: WindowTable | None = None) -> list[BoundRow]:
    """Exact tails against ``exp(-D)`` over the scan window: ``P(X <= m)`` for
    ``m <= mean`` and ``P(X >= m)`` for ``m >= mean``."""
    if table is None:
        table = WindowTable.build(spec, threshold)
    rows = []
    for m in table.outcomes:
        d = divergence(spec, m)
        bound = math.exp(-d)
        if m <= spec.mean:
            rows.append(BoundRow(m, "lower", table.cdf_at(m), bound, d))
        if m >= spec.mean:
            rows.append(BoundRow(m, "upper", table.sf_at(m), bound, d))
    return rows
