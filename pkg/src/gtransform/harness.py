"""Grid scans for the intersection and increasing properties, Gamma ordering,
the Poisson/Gamma waiting-time duality and exp(-D) tail bounds.

Each check returns a report dataclass whose ``status`` is ``"pass"``,
``"fail"`` (violations present) or ``"indeterminate"`` (only ties that
double precision cannot resolve).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .distributions import Binomial, GammaShape, Geometric, Poisson, PoissonBinomial, is_discrete
from .specfun import DomainError, normal_interval, reg_gamma_pair, std_normal_cdf
from .tables import bound_curve, qq_table
from .transform import _g_extended, g_value
from .window import DEFAULT_THRESHOLD, TIE, WindowTable, crossing

RATIO_MARGIN = 1e-12
GAMMA_TOL = 1e-12
LINK_TOL = 1e-13
CHERNOFF_TOL = 1e-13
# exp(log x) is not an exact round trip; boundary equality is up to a few ulps.
BOUNDARY_ULPS = 4
CELL_FLOOR = 1e-300

BINOMIAL_PS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
GEOMETRIC_MUS = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
GAMMA_SHAPES = (0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0)


def _status(violations, indeterminate) -> str:
    if violations:
        return "fail"
    return "indeterminate" if indeterminate else "pass"


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def default_binomial_grid(max_n: int = 2000) -> list[Binomial]:
    ns = list(range(1, min(50, max_n) + 1)) + list(range(60, max_n + 1, 20))
    return [Binomial(n, p) for n in ns for p in BINOMIAL_PS]


def default_poisson_grid(max_lam: float = 500.0) -> list[Poisson]:
    lams = np.geomspace(0.01, 500.0, 200)
    return [Poisson(float(lam)) for lam in lams if lam <= max_lam]


def default_geometric_grid() -> list[Geometric]:
    return [Geometric(mu) for mu in GEOMETRIC_MUS]


def default_gamma_t_grid(m: float, points: int = 500) -> list[float]:
    half = 6.0 * math.sqrt(m)
    lo = max(m - half, 1e-3 * m)
    return [float(t) for t in np.linspace(lo, m + half, points)]


def default_link_t_grid(points: int = 50) -> list[float]:
    return [float(t) for t in np.geomspace(0.05, 250.0, points)]


def parse_spec(text: str):
    """Family spec from ``"binomial 40 0.5"``, ``"poisson 20"``, ``"gamma 2"``,
    ``"geometric 1.5"`` or ``"poisson-binomial 0.1 0.2 0.3"``."""
    parts = text.replace(",", " ").split()
    if not parts:
        raise DomainError("empty family spec")
    name, args = parts[0].lower(), parts[1:]
    try:
        if name == "binomial" and len(args) == 2:
            return Binomial(int(args[0]), float(args[1]))
        if name == "poisson" and len(args) == 1:
            return Poisson(float(args[0]))
        if name == "gamma" and len(args) == 1:
            return GammaShape(float(args[0]))
        if name == "geometric" and len(args) == 1:
            return Geometric(float(args[0]))
        if name == "poisson-binomial" and args:
            return PoissonBinomial(tuple(float(a) for a in args))
    except ValueError as exc:
        raise DomainError(f"bad parameters in {text!r}: {exc}") from None
    raise DomainError(f"cannot parse family spec {text!r}")


@dataclass
class GridSpec:
    """A list of family specs plus the pmf threshold of the scan windows."""

    family: str
    specs: list
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not self.specs:
            raise DomainError("grid is empty")
        if not 0.0 < self.threshold < 1e-6:
            raise DomainError(f"threshold must lie in (0, 1e-6), got {self.threshold}")

    @classmethod
    def default(cls, family: str, threshold: float = DEFAULT_THRESHOLD, **kw) -> "GridSpec":
        builders = {
            "binomial": default_binomial_grid,
            "poisson": default_poisson_grid,
            "geometric": default_geometric_grid,
        }
        if family not in builders:
            raise DomainError(f"no default grid for {family!r}")
        return cls(family, builders[family](**kw), threshold)

    @classmethod
    def from_file(cls, path, threshold: float = DEFAULT_THRESHOLD) -> "GridSpec":
        """One spec per line in :func:`parse_spec` syntax; ``#`` starts a comment."""
        specs = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                specs.append(parse_spec(line))
        family = "mixed"
        if specs and len({type(s) for s in specs}) == 1:
            family = type(specs[0]).__name__.lower()
        return cls(family, specs, threshold)


def run_grid(check: Callable, specs: Sequence, jobs: int = 1, **kw) -> list:
    """Apply ``check`` to every spec; results keep grid order whatever ``jobs`` is."""
    if jobs <= 1 or len(specs) < 2:
        return [check(s, **kw) for s in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_CallWith(check, kw), specs, chunksize=max(1, len(specs) // (4 * jobs))))


class _CallWith:
    def __init__(self, fn, kw):
        self.fn, self.kw = fn, kw

    def __call__(self, spec):
        return self.fn(spec, **self.kw)


# ---------------------------------------------------------------------------
# Intersection property
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingRecord:
    """Step ``[P(M < m), P(M <= m)]`` against the level ``Phi(G(m))``.

    The ``*_c`` fields are the complements ``P(M >= m)``, ``1 - Phi(G(m))``
    and ``P(M > m)``.
    """

    m: int
    lower: float
    mid: float
    upper: float
    lower_c: float
    mid_c: float
    upper_c: float
    r: float
    margin_lower: float
    margin_upper: float
    status: str


@dataclass(frozen=True)
class Violation:
    m: int
    which: str
    margin: float


@dataclass
class ConjectureReport:
    spec: object
    kind: str
    window: tuple[int, int]
    threshold: float
    records: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    indeterminate: list = field(default_factory=list)
    ratio_deltas: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return _status(self.violations, self.indeterminate)

    def reproduce(self) -> str:
        """Shell command that re-runs this single check."""
        return f"gtransform check {self.kind} --family {spec_text(self.spec)} --threshold {self.threshold!r}"


def spec_text(spec) -> str:
    """Inverse of :func:`parse_spec`."""
    if isinstance(spec, Binomial):
        return f"binomial {spec.n} {spec.p!r}"
    if isinstance(spec, Poisson):
        return f"poisson {spec.lam!r}"
    if isinstance(spec, Geometric):
        return f"geometric {spec.mu!r}"
    if isinstance(spec, GammaShape):
        return f"gamma {spec.m!r}"
    return "poisson-binomial " + " ".join(repr(p) for p in spec.probs)


def _crossing_records(table: WindowTable) -> list[CrossingRecord]:
    spec = table.spec
    out = []
    for m in table.outcomes:
        g = g_value(spec, m)
        mid, mid_c = std_normal_cdf(g), std_normal_cdf(-g)
        lower, upper = table.cdf_at(m - 1), table.cdf_at(m)
        lower_c, upper_c = table.sf_at(m), table.sf_at(m + 1)
        c = crossing(lower, upper, lower_c, upper_c, mid, mid_c)
        verdicts = (c.verdict("lower"), c.verdict("upper"))
        status = "violation" if "violation" in verdicts else "indeterminate" if "indeterminate" in verdicts else "ok"
        out.append(
            CrossingRecord(
                m, lower, mid, upper, lower_c, mid_c, upper_c, c.position, c.margin_lower, c.margin_upper, status
            )
        )
    return out


def _classify(rec: CrossingRecord, report: ConjectureReport):
    c = crossing(rec.lower, rec.upper, rec.lower_c, rec.upper_c, rec.mid, rec.mid_c)
    for which, margin in (("lower", c.margin_lower), ("upper", c.margin_upper)):
        verdict = c.verdict(which)
        if verdict == "violation":
            report.violations.append(Violation(rec.m, which, margin))
        elif verdict == "indeterminate":
            report.indeterminate.append(Violation(rec.m, which, margin))


def check_intersection(spec, threshold: float = DEFAULT_THRESHOLD) -> ConjectureReport:
    """Check ``P(M < m) < Phi(G(m)) < P(M <= m)`` on the scan window.

    Margins within ``1e-14`` (relative to the compared tail values) are
    listed as indeterminate rather than as violations.
    """
    table = WindowTable.build(spec, threshold)
    report = ConjectureReport(spec, "intersection", (table.lo, table.hi), threshold)
    report.records = _crossing_records(table)
    for rec in report.records:
        _classify(rec, report)
    return report


# ---------------------------------------------------------------------------
# Increasing property
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioRecord:
    m: int
    pmf: float
    cell_lower: float
    cell_upper: float
    ratio_lower: float
    ratio_upper: float


def _ratio_records(table: WindowTable) -> tuple[list[RatioRecord], list[int]]:
    spec = table.spec
    gs = {m: _g_extended(spec, m) for m in range(table.lo - 1, table.hi + 2)}
    records, skipped = [], []
    for m in table.outcomes:
        cell_lower = normal_interval(gs[m - 1], gs[m])
        cell_upper = normal_interval(gs[m], gs[m + 1])
        if cell_lower < CELL_FLOOR or cell_upper < CELL_FLOOR:
            skipped.append(m)
            continue
        pm = table.pmf_at(m)
        records.append(RatioRecord(m, pm, cell_lower, cell_upper, pm / cell_lower, pm / cell_upper))
    return records, skipped


def _monotone_deltas(values, increasing: bool, margin: float):
    """Successive differences, plus indices breaking (or tying) the stated direction."""
    deltas, bad, ties = [], [], []
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        d = b - a
        deltas.append(d)
        tol = margin * max(1.0, abs(a), abs(b))
        signed = d if increasing else -d
        if abs(d) <= tol:
            ties.append((i, d))
        elif signed < 0:
            bad.append((i, d))
    return deltas, bad, ties


def check_increasing(spec, threshold: float = DEFAULT_THRESHOLD, margin: float = RATIO_MARGIN) -> ConjectureReport:
    """Check that ``pmf(m) / (Phi(G(m+1)) - Phi(G(m)))`` is nondecreasing and
    ``pmf(m) / (Phi(G(m)) - Phi(G(m-1)))`` nonincreasing over the scan window."""
    table = WindowTable.build(spec, threshold)
    report = ConjectureReport(spec, "increasing", (table.lo, table.hi), threshold)
    records, report.skipped = _ratio_records(table)
    report.records = records
    up = [r.ratio_upper for r in records]
    low = [r.ratio_lower for r in records]
    d_up, bad_up, tie_up = _monotone_deltas(up, True, margin)
    d_low, bad_low, tie_low = _monotone_deltas(low, False, margin)
    report.ratio_deltas = {"upper": d_up, "lower": d_low}
    for name, bad, ties in (("ratio-upper", bad_up, tie_up), ("ratio-lower", bad_low, tie_low)):
        for i, d in bad:
            report.violations.append(Violation(records[i + 1].m, name, d))
        for i, d in ties:
            report.indeterminate.append(Violation(records[i + 1].m, name, d))
    return report


# ---------------------------------------------------------------------------
# Likelihood-ratio ordering implication
# ---------------------------------------------------------------------------


def ratio_order_implies(f1: Sequence[float], f2: Sequence[float], margin: float = RATIO_MARGIN) -> dict:
    """For pmfs on a common ordered support: if ``f1/f2`` is nondecreasing,
    ``X1`` dominates ``X2`` stochastically, i.e. ``F1 <= F2`` pointwise.

    Returns ``{"monotone": bool, "ordered": bool | None}``; ``ordered`` is
    ``None`` when the ratio is not monotone (the implication is vacuous).
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(f2 > 0, f1 / f2, np.inf)
    finite = ratio[np.isfinite(ratio)]
    _, bad, _ = _monotone_deltas(list(finite), True, margin)
    if bad:
        return {"monotone": False, "ordered": None}
    F1 = np.cumsum(f1) / f1.sum()
    F2 = np.cumsum(f2) / f2.sum()
    return {"monotone": True, "ordered": bool(np.all(F1 <= F2 + 1e-13))}


@dataclass
class LemmaReport:
    spec: object
    upper_monotone: bool
    lower_monotone: bool
    upper_implied_holds: bool | None
    lower_implied_holds: bool | None

    @property
    def status(self) -> str:
        held = [h for h in (self.upper_implied_holds, self.lower_implied_holds) if h is not None]
        return "pass" if all(held) else "fail"


def check_lemma_ratio(spec, threshold: float = DEFAULT_THRESHOLD) -> LemmaReport:
    """Where a ratio sequence of the increasing property is monotone on the
    window, confirm the stochastic-order inequality it implies: a nondecreasing
    ``pmf / upper cell`` gives ``P(M < m) <= Phi(G(m))``, a nonincreasing
    ``pmf / lower cell`` gives ``Phi(G(m)) <= P(M <= m)``."""
    inc = check_increasing(spec, threshold)
    inter = check_intersection(spec, threshold)
    up_ok = not any(v.which == "ratio-upper" for v in inc.violations)
    low_ok = not any(v.which == "ratio-lower" for v in inc.violations)
    lower_bad = any(v.which == "lower" for v in inter.violations)
    upper_bad = any(v.which == "upper" for v in inter.violations)
    return LemmaReport(
        spec,
        up_ok,
        low_ok,
        (not lower_bad) if up_ok else None,
        (not upper_bad) if low_ok else None,
    )


# ---------------------------------------------------------------------------
# Gamma ordering and the Poisson/Gamma link
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaRow:
    t: float
    g: float
    gauss: float
    cdf: float
    margin: float


@dataclass
class GammaOrderReport:
    m: float
    rows: list
    violations: list
    tol: float

    @property
    def status(self) -> str:
        return "fail" if self.violations else "pass"

    @property
    def min_margin(self) -> float:
        return min(r.margin for r in self.rows)


def check_gamma_ordering(m: float, t_grid: Iterable[float] | None = None, tol: float = GAMMA_TOL) -> GammaOrderReport:
    """Check ``Phi(G(t)) <= P(T <= t)`` for ``T ~ Gamma(m, 1)`` on ``t_grid``.

    ``margin`` is ``P(T <= t) - Phi(G(t))``, evaluated through the upper
    tails when ``G(t) > 0``.
    """
    spec = GammaShape(m)
    if t_grid is None:
        t_grid = default_gamma_t_grid(m)
    t_grid = list(t_grid)
    if not t_grid:
        raise DomainError("empty t grid")
    rows, violations = [], []
    for t in t_grid:
        g = g_value(spec, t)
        p, q = reg_gamma_pair(m, t)
        if g <= 0:
            gauss = std_normal_cdf(g)
            margin = p - gauss
        else:
            gauss = 1.0 - std_normal_cdf(-g)
            margin = std_normal_cdf(-g) - q
        row = GammaRow(t, g, gauss, p, margin)
        rows.append(row)
        if margin < -tol:
            violations.append(row)
    return GammaOrderReport(m, rows, violations, tol)


def _poisson_sf_bruteforce(m: int, lam: float) -> float:
    """``P(M >= m)`` by summing pmf terms directly."""
    spec = Poisson(lam)
    if m <= 0:
        return 1.0
    if m > lam:
        terms = []
        k = m
        while True:
            term = math.exp(spec.log_pmf(k))
            terms.append(term)
            if term == 0.0 or (k > lam and term < 1e-18 * math.fsum(terms)):
                break
            k += 1
        return math.fsum(terms)
    return 1.0 - math.fsum(math.exp(spec.log_pmf(k)) for k in range(m))


@dataclass(frozen=True)
class LinkRecord:
    m: int
    t: float
    poisson_sf: float
    gamma_cdf: float
    poisson_sf_bruteforce: float
    abs_err: float
    abs_err_bruteforce: float
    g_poisson: float
    g_gamma: float
    g_err: float

    @property
    def ok(self) -> bool:
        return max(self.abs_err, self.abs_err_bruteforce, self.g_err) <= LINK_TOL


def check_poisson_gamma_link(m: int, t: float) -> LinkRecord:
    """``P(M >= m) = P(T <= t)`` for ``M ~ Poisson(t)``, ``T ~ Gamma(m, 1)``,
    and ``G_Poisson(m) = -G_Gamma(t)``. The Poisson tail is also summed
    directly from its pmf as an independent route."""
    if m < 1 or t <= 0:
        raise DomainError("link check needs m >= 1 and t > 0")
    pois, gam = Poisson(t), GammaShape(m)
    sf = pois.tails(m - 1)[1]
    gcdf = gam.tails(t)[0]
    brute = _poisson_sf_bruteforce(m, t)
    gp = g_value(pois, m)
    gg = g_value(gam, t)
    return LinkRecord(m, t, sf, gcdf, brute, abs(sf - gcdf), abs(brute - gcdf), gp, gg, abs(gp + gg))


@dataclass
class LinkReport:
    records: list

    @property
    def max_abs_err(self) -> float:
        return max(max(r.abs_err, r.abs_err_bruteforce) for r in self.records)

    @property
    def max_g_err(self) -> float:
        return max(r.g_err for r in self.records)

    @property
    def status(self) -> str:
        return "pass" if all(r.ok for r in self.records) else "fail"


def check_link_grid(ms: Iterable[int] = range(1, 101), ts: Iterable[float] | None = None) -> LinkReport:
    ts = default_link_t_grid() if ts is None else list(ts)
    return LinkReport([check_poisson_gamma_link(m, t) for m in ms for t in ts])


# ---------------------------------------------------------------------------
# Poisson intersection scan
# ---------------------------------------------------------------------------


@dataclass
class GridReport:
    kind: str
    reports: list

    @property
    def violations(self) -> list:
        return [(r.spec, v) for r in self.reports for v in r.violations]

    @property
    def indeterminate(self) -> list:
        return [(r.spec, v) for r in self.reports for v in r.indeterminate]

    @property
    def status(self) -> str:
        return _status(self.violations, self.indeterminate)

    def failing(self) -> list:
        return [r for r in self.reports if r.status == "fail"]


def check_theorem_poisson(lams: Iterable[float] | None = None, threshold: float = DEFAULT_THRESHOLD, jobs: int = 1):
    """Intersection scan over Poisson means; includes ``m <= 5`` whenever those
    outcomes are in the scan window."""
    specs = default_poisson_grid() if lams is None else [Poisson(lam) for lam in lams]
    return GridReport("intersection", run_grid(check_intersection, specs, jobs=jobs, threshold=threshold))


@dataclass
class ChernoffReport:
    spec: object
    rows: list
    violations: list
    boundary_equalities: list

    @property
    def status(self) -> str:
        return "fail" if self.violations else "pass"


def _within_ulps(a: float, b: float, n: int) -> bool:
    return abs(a - b) <= n * math.ulp(max(abs(a), abs(b)))


def check_chernoff(spec, threshold: float = DEFAULT_THRESHOLD, tol: float = CHERNOFF_TOL) -> ChernoffReport:
    """Exact tails against ``exp(-D)`` on the scan window; records whether the
    support boundaries inside the window meet the bound with equality."""
    rows = bound_curve(spec, threshold)
    violations = [r for r in rows if r.exact_tail > r.bound + tol]
    lo, hi = spec.support
    eq = []
    for r in rows:
        at_bottom = r.outcome == lo and r.side == "lower"
        at_top = hi is not None and r.outcome == hi and r.side == "upper"
        if at_bottom or at_top:
            eq.append((r.outcome, r.side, _within_ulps(r.exact_tail, r.bound, BOUNDARY_ULPS)))
    return ChernoffReport(spec, rows, violations, eq)


# ---------------------------------------------------------------------------
# Skewed binomial: two-sided G^2 against chi-square(1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkewWitness:
    n: int
    p: float
    outcomes: tuple
    stat_value: float
    crossing: float
    signed_status: str


@dataclass
class SkewReport:
    two_sided: bool
    searched: int
    witnesses: list

    @property
    def status(self) -> str:
        return "found" if self.witnesses else "inconclusive"


SKEW_NS = tuple(range(1, 101))
SKEW_PS = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5)


def find_skewed_binomial_failure(
    two_sided: bool = True,
    ns: Iterable[int] = SKEW_NS,
    ps: Iterable[float] = SKEW_PS,
    threshold: float = DEFAULT_THRESHOLD,
    limit: int = 20,
) -> SkewReport:
    """Search for binomials whose Q-Q steps miss the identity.

    With ``two_sided`` the folded ``G^2`` statistic is compared with the
    chi-square(1) law, and a witness is kept only if the signed root against
    the Gaussian still has the intersection property at the same ``(n, p)``.
    Without it, the signed comparison itself is searched.
    """
    witnesses, searched = [], 0
    ps = list(ps)
    for n in ns:
        for p in ps:
            searched += 1
            spec = Binomial(n, p)
            if two_sided:
                rows = qq_table(spec, "chisq1", "g2", threshold)
            else:
                rows = qq_table(spec, "gaussian", "signed-g", threshold)
            bad = [r for r in rows if _row_violates(r)]
            if not bad:
                continue
            signed = check_intersection(spec, threshold).status
            if two_sided and signed == "fail":
                continue
            r = bad[0]
            witnesses.append(SkewWitness(n, p, r.outcomes, r.stat_value, r.crossing, signed))
            if len(witnesses) >= limit:
                return SkewReport(two_sided, searched, witnesses)
    return SkewReport(two_sided, searched, witnesses)


def _row_violates(row) -> bool:
    c = crossing(row.lower, row.upper, row.lower_c, row.upper_c, row.p_cum, row.p_cum_c)
    return "violation" in (c.verdict("lower"), c.verdict("upper"))


def discrete_only(spec):
    if not is_discrete(spec):
        raise DomainError(f"{spec!r} is not a discrete family")
    return spec


__all__ = [
    "ChernoffReport",
    "ConjectureReport",
    "CrossingRecord",
    "GammaOrderReport",
    "GridReport",
    "GridSpec",
    "LemmaReport",
    "LinkRecord",
    "LinkReport",
    "SkewReport",
    "check_chernoff",
    "check_gamma_ordering",
    "check_increasing",
    "check_intersection",
    "check_lemma_ratio",
    "check_link_grid",
    "check_poisson_gamma_link",
    "check_theorem_poisson",
    "default_binomial_grid",
    "default_geometric_grid",
    "default_poisson_grid",
    "find_skewed_binomial_failure",
    "parse_spec",
    "ratio_order_implies",
    "run_grid",
    "spec_text",
]
