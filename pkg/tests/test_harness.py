import math

import pytest

from gtransform.distributions import Binomial, GammaShape, Geometric, Poisson, PoissonBinomial
from gtransform.harness import (
    GridSpec,
    check_chernoff,
    check_gamma_ordering,
    check_increasing,
    check_intersection,
    check_lemma_ratio,
    check_link_grid,
    check_poisson_gamma_link,
    check_theorem_poisson,
    default_binomial_grid,
    default_gamma_t_grid,
    default_geometric_grid,
    default_poisson_grid,
    find_skewed_binomial_failure,
    parse_spec,
    ratio_order_implies,
    run_grid,
    spec_text,
)
from gtransform.specfun import DomainError, reg_gamma_lower
from gtransform.tables import qq_table


class TestGrids:
    def test_default_sizes(self):
        assert len(default_binomial_grid()) == (50 + 98) * 8
        assert len(default_poisson_grid()) == 200
        assert [g.mu for g in default_geometric_grid()][0] == 0.1

    def test_poisson_grid_endpoints(self):
        lams = [s.lam for s in default_poisson_grid()]
        assert lams[0] == pytest.approx(0.01) and lams[-1] == pytest.approx(500.0)

    def test_gamma_t_grid(self):
        ts = default_gamma_t_grid(100.0)
        assert len(ts) == 500
        assert ts[0] == pytest.approx(40.0) and ts[-1] == pytest.approx(160.0)
        assert default_gamma_t_grid(0.5)[0] > 0

    @pytest.mark.parametrize(
        "text, spec",
        [
            ("binomial 40 0.5", Binomial(40, 0.5)),
            ("poisson 20", Poisson(20.0)),
            ("gamma 2", GammaShape(2.0)),
            ("geometric 1.5", Geometric(1.5)),
            ("poisson-binomial 0.1, 0.2 0.3", PoissonBinomial((0.1, 0.2, 0.3))),
        ],
    )
    def test_parse_spec_round_trip(self, text, spec):
        assert parse_spec(text) == spec
        assert parse_spec(spec_text(spec)) == spec

    @pytest.mark.parametrize("text", ["", "binomial 40", "weibull 2", "poisson x"])
    def test_parse_spec_errors(self, text):
        with pytest.raises(DomainError):
            parse_spec(text)

    def test_gridspec_validation(self):
        with pytest.raises(DomainError):
            GridSpec("poisson", [])
        with pytest.raises(DomainError):
            GridSpec("poisson", [Poisson(1.0)], threshold=1e-3)
        with pytest.raises(DomainError):
            GridSpec.default("gamma")

    def test_gridspec_from_file(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text("# two poissons\npoisson 1\n\npoisson 2.5  # trailing note\n")
        grid = GridSpec.from_file(path)
        assert grid.specs == [Poisson(1.0), Poisson(2.5)]
        assert grid.family == "poisson"

    def test_parallel_order_is_deterministic(self):
        specs = default_geometric_grid() + [Poisson(3.0), Binomial(9, 0.2)]
        serial = run_grid(check_intersection, specs)
        parallel = run_grid(check_intersection, specs, jobs=3)
        assert [r.spec for r in parallel] == specs
        assert [r.records for r in parallel] == [r.records for r in serial]


class TestIntersection:
    def test_poisson_one_first_record(self):
        rec = check_intersection(Poisson(1.0)).records[0]
        assert rec.m == 0
        assert rec.lower == 0.0
        assert rec.mid == pytest.approx(0.0786496035, abs=1e-10)
        assert rec.upper == pytest.approx(0.3678794412, abs=1e-10)
        assert rec.r == pytest.approx(0.2138, abs=1e-4)

    def test_binomial_ten_half(self):
        report = check_intersection(Binomial(10, 0.5))
        rec = next(r for r in report.records if r.m == 7)
        assert rec.lower == pytest.approx(0.828125, abs=1e-15)
        assert rec.mid == pytest.approx(0.9003, abs=1e-4)
        assert rec.upper == pytest.approx(0.9453125, abs=1e-15)
        assert report.status == "pass"
        assert report.window == (0, 10)

    def test_records_cover_window(self):
        report = check_intersection(Poisson(50.0), threshold=1e-10)
        assert [r.m for r in report.records] == list(range(report.window[0], report.window[1] + 1))

    def test_steps_sum_to_pmf(self):
        for spec in (Binomial(200, 0.05), Poisson(30.0), PoissonBinomial((0.3,) * 12)):
            report = check_intersection(spec)
            total = math.fsum(abs(r.upper - r.lower - math.exp(spec.log_pmf(r.m))) for r in report.records)
            assert total <= 1e-13

    def test_geometric_has_violations(self):
        report = check_intersection(Geometric(2.0))
        assert report.status == "fail"
        v = report.violations[0]
        assert v.which == "lower" and v.margin < 0
        rec = next(r for r in report.records if r.m == v.m)
        assert rec.r < 0
        assert "--family geometric 2.0" in report.reproduce()

    def test_exact_tie_is_indeterminate(self):
        # Geometric(1) at m = 1: P(M < 1) = 1/2 = Phi(G(1)) = Phi(0).
        report = check_intersection(Geometric(1.0))
        assert any(v.m == 1 and v.which == "lower" for v in report.indeterminate)

    def test_poisson_mean_grid(self):
        report = check_theorem_poisson([0.1, 0.5, 1, 2, 5, 10, 20, 50, 100])
        assert report.status == "pass"
        small = report.reports[0]
        first = small.records[0]
        assert first.m == 0 and first.margin_lower > 0 and first.margin_upper > 0
        assert all(rec.m in range(small.window[0], small.window[1] + 1) for rec in small.records)

    def test_poisson_twenty_at_mean(self):
        rec = next(r for r in check_intersection(Poisson(20.0)).records if r.m == 20)
        assert rec.mid == 0.5
        assert 0.3 < rec.r < 0.4


class TestIncreasing:
    def test_poisson_one_first_ratio(self):
        rec = check_increasing(Poisson(1.0)).records[0]
        assert rec.ratio_upper == pytest.approx(math.exp(-1) / (0.5 - 0.0786496035251426), rel=1e-12)

    @pytest.mark.parametrize("spec", [Binomial(20, 0.3), Binomial(500, 0.01), Poisson(0.05), Poisson(200.0)])
    def test_binomial_and_poisson_pass(self, spec):
        report = check_increasing(spec)
        assert report.status == "pass"
        assert all(d >= 0 for d in report.ratio_deltas["upper"])
        assert all(d <= 0 for d in report.ratio_deltas["lower"])

    def test_ratios_positive(self):
        for rec in check_increasing(Binomial(40, 0.2)).records:
            assert rec.ratio_lower > 0 and rec.ratio_upper > 0

    def test_geometric_reports_failures(self):
        report = check_increasing(Geometric(2.0))
        assert report.status == "fail"
        assert {v.which for v in report.violations} == {"ratio-upper"}


class TestLemma:
    @pytest.mark.parametrize("spec", [Poisson(1.0), Poisson(5.0), Poisson(20.0), Binomial(20, 0.3)])
    def test_implication_holds(self, spec):
        report = check_lemma_ratio(spec)
        assert report.upper_implied_holds and report.lower_implied_holds
        assert report.status == "pass"

    def test_geometric_partial(self):
        report = check_lemma_ratio(Geometric(2.0))
        assert not report.upper_monotone and report.upper_implied_holds is None
        assert report.lower_implied_holds is True

    def test_non_monotone_ratio_is_vacuous(self):
        assert ratio_order_implies([0.1, 0.5, 0.1, 0.3], [0.25] * 4) == {"monotone": False, "ordered": None}

    def test_monotone_ratio_orders(self):
        assert ratio_order_implies([0.1, 0.2, 0.3, 0.4], [0.25] * 4) == {"monotone": True, "ordered": True}


class TestGammaOrdering:
    def test_exponential_at_mean(self):
        row = check_gamma_ordering(1.0, [1.0]).rows[0]
        assert row.gauss == 0.5
        assert row.cdf == pytest.approx(1 - math.exp(-1), rel=1e-15)

    def test_shape_two_at_mean(self):
        row = check_gamma_ordering(2.0, [2.0]).rows[0]
        assert row.cdf == pytest.approx(0.5939941502901619, rel=1e-14)
        assert row.margin == pytest.approx(0.0939941502901619, rel=1e-13)

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0])
    def test_default_grid_passes(self, m):
        report = check_gamma_ordering(m)
        assert report.status == "pass" and len(report.rows) == 500

    def test_margin_shrinks_with_shape(self):
        widest = []
        for m in (5.0, 50.0, 500.0):
            ts = [m + k / 10 * math.sqrt(m) for k in range(-20, 41)]
            widest.append(max(r.margin for r in check_gamma_ordering(m, ts).rows))
        assert widest[0] > widest[1] > widest[2]

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            check_gamma_ordering(1.0, [])


class TestLink:
    def test_examples(self):
        rec = check_poisson_gamma_link(1, 1.0)
        assert rec.poisson_sf == pytest.approx(1 - math.exp(-1), rel=1e-15)
        rec = check_poisson_gamma_link(2, 1.0)
        assert rec.poisson_sf == pytest.approx(1 - 2 * math.exp(-1), rel=1e-14)
        assert rec.gamma_cdf == pytest.approx(reg_gamma_lower(2.0, 1.0), rel=1e-15)
        assert rec.g_poisson == pytest.approx(0.87897026, abs=1e-8)
        assert rec.g_gamma == pytest.approx(-0.87897026, abs=1e-8)
        assert rec.ok

    def test_default_grid(self):
        report = check_link_grid()
        assert len(report.records) == 5000
        assert report.status == "pass"
        assert report.max_abs_err <= 1e-13 and report.max_g_err <= 1e-13

    @pytest.mark.parametrize("m, t", [(0, 1.0), (3, 0.0)])
    def test_domain(self, m, t):
        with pytest.raises(DomainError):
            check_poisson_gamma_link(m, t)


class TestChernoffScan:
    @pytest.mark.parametrize("spec", [Poisson(1.0), Binomial(10, 0.5), Binomial(7, 0.01), Geometric(3.0)])
    def test_no_violations(self, spec):
        assert check_chernoff(spec).status == "pass"

    def test_boundary_equalities(self):
        assert check_chernoff(Poisson(1.0)).boundary_equalities == [(0, "lower", True)]
        assert check_chernoff(Binomial(10, 0.5)).boundary_equalities == [(0, "lower", True), (10, "upper", True)]


class TestSkewedBinomial:
    def test_symmetric_case_has_no_failure(self):
        report = find_skewed_binomial_failure(ns=range(1, 60, 2), ps=[0.5])
        assert report.status == "inconclusive"

    def test_finds_two_sided_witness(self):
        report = find_skewed_binomial_failure(ps=[0.01, 0.05, 0.1], limit=3)
        assert report.status == "found"
        for w in report.witnesses:
            assert not 0 < w.crossing < 1
            assert w.signed_status != "fail"
            assert check_intersection(Binomial(w.n, w.p)).status != "fail"

    def test_witness_row_is_reproducible(self):
        w = find_skewed_binomial_failure(ps=[0.1], limit=1).witnesses[0]
        rows = qq_table(Binomial(w.n, w.p), "chisq1", "g2")
        row = next(r for r in rows if r.outcomes == w.outcomes)
        assert row.crossing == w.crossing

    def test_signed_search_is_empty(self):
        report = find_skewed_binomial_failure(two_sided=False, ns=range(1, 40), ps=[0.01, 0.1, 0.3])
        assert report.status == "inconclusive"
