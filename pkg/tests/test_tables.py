import math

import numpy as np
import pytest

from gtransform.distributions import Binomial, GammaShape, Geometric, Poisson, PoissonBinomial
from gtransform.specfun import DomainError, std_normal_cdf
from gtransform.tables import bound_curve, qq_table, reference_cdf, reference_quantile, statistic
from gtransform.window import WindowTable, crossing

SPECS = [
    Binomial(10, 0.5),
    Binomial(101, 0.5),
    Binomial(300, 0.02),
    Poisson(0.3),
    Poisson(20.0),
    Poisson(480.0),
    Geometric(3.0),
    PoissonBinomial((0.1, 0.3, 0.5, 0.7, 0.9, 0.05)),
]


class TestWindow:
    @pytest.mark.parametrize("spec", SPECS)
    def test_window_is_the_threshold_set(self, spec):
        table = WindowTable.build(spec, 1e-15)
        assert all(p >= 1e-15 for p in table.pmf)
        s_lo, s_hi = spec.support
        if table.lo > s_lo:
            assert math.exp(spec.log_pmf(table.lo - 1)) < 1e-15
        if s_hi is None or table.hi < s_hi:
            assert math.exp(spec.log_pmf(table.hi + 1)) < 1e-15

    @pytest.mark.parametrize("spec", SPECS)
    def test_steps_match_pmf(self, spec):
        table = WindowTable.build(spec)
        gap = math.fsum(abs(table.cdf_at(m) - table.cdf_at(m - 1) - table.pmf_at(m)) for m in table.outcomes)
        assert gap <= 1e-13

    @pytest.mark.parametrize("spec", SPECS)
    def test_accumulated_tails_match_special_functions(self, spec):
        table = WindowTable.build(spec)
        for m in table.outcomes:
            lower, upper = spec.tails(m)
            assert abs(table.cdf_at(m) - lower) <= 1e-13
            assert abs(table.sf_at(m + 1) - upper) <= 1e-13

    def test_outside_window_falls_back(self):
        spec = Poisson(50.0)
        table = WindowTable.build(spec)
        far = table.hi + 5
        assert table.sf_at(far) == spec.tails(far - 1)[1]
        assert table.cdf_at(-3) == 0.0
        assert table.pmf_at(-1) == 0.0

    @pytest.mark.parametrize("threshold", [0.0, 1e-6, 0.5, -1e-20])
    def test_threshold_range(self, threshold):
        with pytest.raises(DomainError):
            WindowTable.build(Poisson(1.0), threshold)

    def test_rejects_continuous(self):
        with pytest.raises(DomainError):
            WindowTable.build(GammaShape(2.0))


class TestCrossing:
    def test_position(self):
        c = crossing(0.2, 0.6, 0.8, 0.4, 0.3, 0.7)
        assert c.position == pytest.approx(0.25)
        assert c.verdict("lower") == "ok" and c.verdict("upper") == "ok"

    def test_complemented_margins_above_half(self):
        c = crossing(1 - 3e-17, 1.0, 4e-17, 1e-17, 1.0, 2e-17)
        assert c.margin_lower == pytest.approx(2e-17)
        assert c.margin_upper == pytest.approx(1e-17)
        assert c.position == pytest.approx(2 / 3)

    def test_violation_and_tie(self):
        assert crossing(0.5, 0.7, 0.5, 0.3, 0.45, 0.55).verdict("lower") == "violation"
        assert crossing(0.25, 0.4, 0.75, 0.6, 0.25, 0.75).verdict("lower") == "indeterminate"


class TestReference:
    @pytest.mark.parametrize("x", [0.01, 1.0, 3.84, 20.0])
    def test_chisq1_cdf(self, x):
        f, fc = reference_cdf("chisq1", x)
        assert f == pytest.approx(std_normal_cdf(math.sqrt(x)) - std_normal_cdf(-math.sqrt(x)), abs=1e-15)
        assert fc == pytest.approx(2 * std_normal_cdf(-math.sqrt(x)), rel=1e-15)

    @pytest.mark.parametrize("reference", ["gaussian", "chisq1"])
    @pytest.mark.parametrize("p", [1e-9, 0.1, 0.5, 0.95, 1 - 1e-9])
    def test_quantile_inverts_cdf(self, reference, p):
        x = reference_quantile(reference, p, 1 - p)
        assert reference_cdf(reference, x)[0] == pytest.approx(p, rel=1e-9)

    def test_quantile_endpoints(self):
        assert reference_quantile("gaussian", 0.0, 1.0) == -math.inf
        assert reference_quantile("gaussian", 1.0, 0.0) == math.inf
        assert reference_quantile("chisq1", 0.0, 1.0) == 0.0

    def test_unknown_reference(self):
        with pytest.raises(DomainError):
            reference_cdf("student", 1.0)


class TestStatistic:
    def test_pearson(self):
        spec = Binomial(10, 0.5)
        assert statistic(spec, 7, "chi2", signed=True) == pytest.approx(2 / math.sqrt(2.5))
        assert statistic(spec, 7, "chi2", signed=False) == pytest.approx(1.6)

    def test_g2(self):
        assert statistic(Binomial(10, 0.5), 7, "g2", signed=False) == pytest.approx(1.645657570101036, rel=1e-14)

    def test_mismatched(self):
        with pytest.raises(DomainError):
            statistic(Poisson(1.0), 1, "g2", signed=True)


class TestQQTable:
    def test_poisson_one_first_row(self):
        row = qq_table(Poisson(1.0))[0]
        assert row.outcomes == (0,)
        assert row.stat_value == pytest.approx(-math.sqrt(2), rel=1e-15)
        assert row.lower == 0.0 and row.upper == pytest.approx(math.exp(-1), rel=1e-15)
        assert row.crossing == pytest.approx(0.21379, abs=1e-5)
        assert row.ref_quantile_left == -math.inf

    @pytest.mark.parametrize("spec", SPECS)
    def test_signed_rows_ordered(self, spec):
        rows = qq_table(spec, "gaussian", "signed-g")
        pc = [r.p_cum_c for r in rows]
        assert all(b < a for a, b in zip(pc, pc[1:]))
        assert all(b >= a for a, b in zip([r.p_cum for r in rows], [r.p_cum for r in rows][1:]))
        for a, b in zip(rows, rows[1:]):
            assert a.upper == b.lower

    @pytest.mark.parametrize("spec", [s for s in SPECS if not isinstance(s, Geometric)])
    def test_signed_steps_crossed(self, spec):
        assert all(0 < r.crossing < 1 for r in qq_table(spec))

    def test_symmetric_binomial_folds_pairs(self):
        rows = qq_table(Binomial(10, 0.5), "chisq1", "g2")
        assert rows[0].outcomes == (5,)
        assert rows[0].stat_value == 0.0
        assert [r.outcomes for r in rows[1:]] == [(4, 6), (3, 7), (2, 8), (1, 9), (0, 10)]
        assert rows[-1].upper == 1.0
        assert rows[1].lower == pytest.approx(rows[0].upper, rel=1e-14)

    @pytest.mark.parametrize("spec", [Binomial(31, 0.2), Poisson(7.5), PoissonBinomial((0.2, 0.6, 0.9))])
    def test_folded_rows_ordered(self, spec):
        for stat in ("g2", "chi2"):
            rows = qq_table(spec, "chisq1", stat)
            vals = [r.stat_value for r in rows]
            assert all(b > a for a, b in zip(vals, vals[1:]))
            for a, b in zip(rows, rows[1:]):
                assert b.lower == pytest.approx(a.upper, rel=1e-12, abs=1e-15)

    def test_pearson_signed(self):
        rows = qq_table(Binomial(20, 0.5), "gaussian", "chi2")
        assert rows[10].stat_value == 0.0

    def test_single_atom_window(self):
        rows = qq_table(Poisson(1e-20))
        assert len(rows) == 1
        assert rows[0].outcomes == (0,)

    @pytest.mark.parametrize(
        "reference, stat",
        [("gaussian", "g2"), ("chisq1", "signed-g"), ("cauchy", "g2"), ("gaussian", "likelihood")],
    )
    def test_rejects_mismatches(self, reference, stat):
        with pytest.raises(DomainError):
            qq_table(Poisson(2.0), reference, stat)

    def test_rejects_continuous(self):
        with pytest.raises(DomainError):
            qq_table(GammaShape(3.0))


class TestBoundCurve:
    def test_poisson_one(self):
        rows = bound_curve(Poisson(1.0))
        first = rows[0]
        assert (first.outcome, first.side) == (0, "lower")
        assert first.exact_tail == first.bound == math.exp(-1)

    def test_binomial_top(self):
        rows = bound_curve(Binomial(10, 0.5))
        last = rows[-1]
        assert (last.outcome, last.side, last.exact_tail, last.bound) == (10, "upper", 2.0**-10, 2.0**-10)
        at_mean = [r for r in rows if r.outcome == 5]
        assert [r.side for r in at_mean] == ["lower", "upper"] and all(r.bound == 1.0 for r in at_mean)

    @pytest.mark.parametrize("spec", SPECS)
    def test_tails_below_bound(self, spec):
        assert all(r.exact_tail <= r.bound + 1e-13 for r in bound_curve(spec))

    def test_reuses_table(self):
        spec = Geometric(1.5)
        table = WindowTable.build(spec, 1e-10)
        assert len(bound_curve(spec, table=table)) == len(np.arange(table.lo, table.hi + 1))
