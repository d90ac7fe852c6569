"""Command line front end: Q-Q tables, bound curves and property checks as CSV.

Exit codes: 0 all checks pass, 1 usage or numerical error, 2 violations
found, 3 only indeterminate (tied) findings.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so every emitted table round-trips bit for bit.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys

from . import __version__
from .distributions import Binomial, Geometric, Poisson, is_discrete
from .harness import (
    GAMMA_SHAPES,
    GridSpec,
    check_chernoff,
    check_gamma_ordering,
    check_increasing,
    check_intersection,
    check_lemma_ratio,
    check_link_grid,
    default_binomial_grid,
    default_gamma_t_grid,
    default_link_t_grid,
    find_skewed_binomial_failure,
    parse_spec,
    run_grid,
    spec_text,
)
from .specfun import ConvergenceError, DomainError
from .tables import REFERENCES, STATISTICS, bound_curve, qq_table
from .window import DEFAULT_THRESHOLD

CSV_SCHEMA_VERSION = "1"

EXIT_PASS, EXIT_ERROR, EXIT_VIOLATION, EXIT_INDETERMINATE = 0, 1, 2, 3

QQ_COLUMNS = (
    "outcomes",
    "stat_value",
    "p_cum",
    "p_cum_c",
    "ref_quantile",
    "ref_quantile_left",
    "lower",
    "upper",
    "lower_c",
    "upper_c",
    "r",
)
BOUND_COLUMNS = ("m", "side", "exact_tail", "bound", "div_nats")

# Used by ``qq`` when no family is given. The size is odd so that no outcome
# sits exactly on the mean, where the folded G^2 step starts at zero.
SHOWCASE_BINOMIAL = Binomial(101, 0.5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    """CSV cell text; floats use the shortest round-trip representation."""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(str(v) for v in value)
    if value is None:
        return ""
    return str(value)


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def write_csv(path, columns, rows):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _note(msg):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# Family and grid arguments
# ---------------------------------------------------------------------------


def _add_family_args(p):
    g = p.add_argument_group("family")
    g.add_argument("--family", nargs="+", metavar="ARG", help="family name then its parameters, e.g. binomial 40 0.5")
    g.add_argument("--binomial", nargs=2, metavar=("N", "P"))
    g.add_argument("--poisson", metavar="LAMBDA")
    g.add_argument("--geometric", metavar="MU")
    g.add_argument("--poisson-binomial", nargs="+", metavar="P", dest="poisson_binomial")


def _family_from_args(args):
    given = []
    if args.family:
        given.append(" ".join(args.family))
    if args.binomial:
        given.append("binomial " + " ".join(args.binomial))
    if args.poisson is not None:
        given.append(f"poisson {args.poisson}")
    if args.geometric is not None:
        given.append(f"geometric {args.geometric}")
    if args.poisson_binomial:
        given.append("poisson-binomial " + " ".join(args.poisson_binomial))
    if len(given) > 1:
        raise UsageError("give exactly one family")
    return parse_spec(given[0]) if given else None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a list of numbers, got {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    """``"1..100"`` (inclusive) or a comma list of integers."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise UsageError(f"empty range {text!r}")
            return list(range(a, b + 1))
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a..b or a comma list of integers, got {text!r}") from None


def _binomial_grid(text: str):
    if text == "default":
        return default_binomial_grid()
    specs = []
    for item in text.replace(",", " ").split():
        n, _, p = item.partition(":")
        if not p:
            raise UsageError(f"binomial grid items are N:P, got {item!r}")
        specs.append(Binomial(int(n), float(p)))
    return specs


def _grid_from_args(args) -> list:
    specs = []
    if args.family or args.binomial or args.poisson or args.geometric or args.poisson_binomial:
        specs.append(_family_from_args(args))
    if args.poisson_grid:
        specs += (
            GridSpec.default("poisson").specs
            if args.poisson_grid == "default"
            else [Poisson(v) for v in _floats(args.poisson_grid)]
        )
    if args.binomial_grid:
        specs += _binomial_grid(args.binomial_grid)
    if args.geometric_grid:
        specs += (
            GridSpec.default("geometric").specs
            if args.geometric_grid == "default"
            else [Geometric(v) for v in _floats(args.geometric_grid)]
        )
    if args.grid:
        if args.grid == "default":
            specs += GridSpec.default("binomial").specs
            specs += GridSpec.default("poisson").specs
            specs += GridSpec.default("geometric").specs
        else:
            specs += GridSpec.from_file(args.grid).specs
    if not specs:
        raise UsageError("no family or grid given")
    for s in specs:
        if not is_discrete(s):
            raise UsageError(f"{s.label()} is not a discrete family")
    return specs


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def qq_rows(rows):
    for r in rows:
        yield (
            r.outcomes,
            r.stat_value,
            r.p_cum,
            r.p_cum_c,
            r.ref_quantile_right,
            r.ref_quantile_left,
            r.lower,
            r.upper,
            r.lower_c,
            r.upper_c,
            r.crossing,
        )


def cmd_qq(args) -> int:
    spec = _family_from_args(args)
    if spec is None:
        spec = SHOWCASE_BINOMIAL
    rows = qq_table(spec, args.ref, args.stat, args.threshold)
    write_csv(args.out, QQ_COLUMNS, qq_rows(rows))
    return EXIT_PASS


def cmd_bounds(args) -> int:
    spec = _family_from_args(args)
    if spec is None:
        raise UsageError("bounds needs a family")
    rows = bound_curve(spec, args.threshold)
    write_csv(args.out, BOUND_COLUMNS, ((r.outcome, r.side, r.exact_tail, r.bound, r.div_nats) for r in rows))
    return EXIT_PASS


def _exit_for(n_viol: int, n_indet: int) -> int:
    if n_viol:
        return EXIT_VIOLATION
    return EXIT_INDETERMINATE if n_indet else EXIT_PASS


INTERSECTION_COLUMNS = (
    "family",
    "m",
    "lower",
    "mid",
    "upper",
    "lower_c",
    "mid_c",
    "upper_c",
    "r",
    "margin_lower",
    "margin_upper",
    "status",
)


def _check_intersection(args, specs) -> int:
    reports = run_grid(check_intersection, specs, jobs=args.jobs, threshold=args.threshold)
    rows = []
    for rep in reports:
        for rec in rep.records:
            if args.all or rec.status != "ok":
                rows.append(
                    (
                        spec_text(rep.spec),
                        rec.m,
                        rec.lower,
                        rec.mid,
                        rec.upper,
                        rec.lower_c,
                        rec.mid_c,
                        rec.upper_c,
                        rec.r,
                        rec.margin_lower,
                        rec.margin_upper,
                        rec.status,
                    )
                )
    write_csv(args.out, INTERSECTION_COLUMNS, rows)
    return _summarise("intersection", reports)


INCREASING_COLUMNS = ("family", "m", "pmf", "cell_lower", "cell_upper", "ratio_lower", "ratio_upper", "finding")


def _check_increasing(args, specs) -> int:
    reports = run_grid(check_increasing, specs, jobs=args.jobs, threshold=args.threshold)
    rows = []
    for rep in reports:
        flagged = {}
        for v in rep.violations:
            flagged.setdefault(v.m, []).append(f"violation:{v.which}")
        for v in rep.indeterminate:
            flagged.setdefault(v.m, []).append(f"indeterminate:{v.which}")
        for m in rep.skipped:
            flagged.setdefault(m, []).append("skipped:tiny-cell")
        for rec in rep.records:
            if args.all or rec.m in flagged:
                rows.append(
                    (
                        spec_text(rep.spec),
                        rec.m,
                        rec.pmf,
                        rec.cell_lower,
                        rec.cell_upper,
                        rec.ratio_lower,
                        rec.ratio_upper,
                        ";".join(flagged.get(rec.m, ["ok"])),
                    )
                )
    write_csv(args.out, INCREASING_COLUMNS, rows)
    return _summarise("increasing", reports)


def _summarise(kind, reports) -> int:
    n_viol = sum(len(r.violations) for r in reports)
    n_indet = sum(len(r.indeterminate) for r in reports)
    failing = [r for r in reports if r.violations]
    _note(f"{kind}: {len(reports)} specs, {n_viol} violations, {n_indet} indeterminate")
    for r in failing[:5]:
        _note(f"  reproduce: {r.reproduce()}")
    return _exit_for(n_viol, n_indet)


GAMMA_COLUMNS = ("shape", "t", "g", "gauss", "cdf", "margin", "status")


def _check_gamma_order(args) -> int:
    shapes = GAMMA_SHAPES if args.shapes == "default" else _floats(args.shapes)
    rows, n_viol = [], 0
    for m in shapes:
        rep = check_gamma_ordering(m, default_gamma_t_grid(m, args.points))
        bad = {id(v) for v in rep.violations}
        n_viol += len(rep.violations)
        for r in rep.rows:
            rows.append((float(m), r.t, r.g, r.gauss, r.cdf, r.margin, "violation" if id(r) in bad else "ok"))
    write_csv(args.out, GAMMA_COLUMNS, rows)
    _note(f"gamma-order: {len(shapes)} shapes, {n_viol} violations")
    return _exit_for(n_viol, 0)


LINK_COLUMNS = (
    "m",
    "t",
    "poisson_sf",
    "gamma_cdf",
    "poisson_sf_bruteforce",
    "abs_err",
    "abs_err_bruteforce",
    "g_poisson",
    "g_gamma",
    "g_err",
    "status",
)


def _check_link(args) -> int:
    ms = parse_int_range(args.m)
    ts = default_link_t_grid() if args.t == "default" else _floats(args.t)
    rep = check_link_grid(ms, ts)
    rows = [
        (
            r.m,
            r.t,
            r.poisson_sf,
            r.gamma_cdf,
            r.poisson_sf_bruteforce,
            r.abs_err,
            r.abs_err_bruteforce,
            r.g_poisson,
            r.g_gamma,
            r.g_err,
            "ok" if r.ok else "violation",
        )
        for r in rep.records
    ]
    write_csv(args.out, LINK_COLUMNS, rows)
    n_viol = sum(not r.ok for r in rep.records)
    _note(f"link: {len(rep.records)} points, max abs error {rep.max_abs_err!r}, max G error {rep.max_g_err!r}")
    return _exit_for(n_viol, 0)


LEMMA_COLUMNS = ("family", "upper_monotone", "lower_monotone", "upper_implied_holds", "lower_implied_holds", "status")


def _check_lemma(args, specs) -> int:
    reports = run_grid(check_lemma_ratio, specs, jobs=args.jobs, threshold=args.threshold)
    rows = [
        (
            spec_text(r.spec),
            r.upper_monotone,
            r.lower_monotone,
            r.upper_implied_holds,
            r.lower_implied_holds,
            r.status,
        )
        for r in reports
    ]
    write_csv(args.out, LEMMA_COLUMNS, rows)
    n_viol = sum(r.status == "fail" for r in reports)
    _note(f"lemma: {len(reports)} specs, {n_viol} failed implications")
    return _exit_for(n_viol, 0)


CHERNOFF_COLUMNS = ("family", "m", "side", "exact_tail", "bound", "div_nats", "status")


def _check_chernoff(args, specs) -> int:
    reports = run_grid(check_chernoff, specs, jobs=args.jobs, threshold=args.threshold)
    rows = []
    for rep in reports:
        bad = {(v.outcome, v.side) for v in rep.violations}
        for r in rep.rows:
            key = (r.outcome, r.side)
            if args.all or key in bad:
                rows.append(
                    (spec_text(rep.spec), r.outcome, r.side, r.exact_tail, r.bound, r.div_nats,
                     "violation" if key in bad else "ok")
                )
    write_csv(args.out, CHERNOFF_COLUMNS, rows)
    n_viol = sum(len(r.violations) for r in reports)
    _note(f"chernoff: {len(reports)} specs, {n_viol} violations")
    return _exit_for(n_viol, 0)


SKEW_COLUMNS = ("n", "p", "outcomes", "stat_value", "r", "signed_status")


def _check_skewed(args) -> int:
    rep = find_skewed_binomial_failure(two_sided=not args.signed, threshold=args.threshold)
    rows = [(w.n, w.p, w.outcomes, w.stat_value, w.crossing, w.signed_status) for w in rep.witnesses]
    write_csv(args.out, SKEW_COLUMNS, rows)
    _note(f"skewed: searched {rep.searched} binomials, {len(rep.witnesses)} witnesses ({rep.status})")
    return EXIT_PASS if rep.witnesses else EXIT_INDETERMINATE


CHECKS = ("intersection", "increasing", "gamma-order", "link", "lemma", "chernoff", "skewed")


def cmd_check(args) -> int:
    if args.property == "gamma-order":
        return _check_gamma_order(args)
    if args.property == "link":
        return _check_link(args)
    if args.property == "skewed":
        return _check_skewed(args)
    specs = _grid_from_args(args)
    if args.property == "intersection":
        return _check_intersection(args, specs)
    if args.property == "increasing":
        return _check_increasing(args, specs)
    if args.property == "lemma":
        return _check_lemma(args, specs)
    return _check_chernoff(args, specs)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtransform", description=__doc__.split("\n\n")[0])
    parser.add_argument(
        "--version", action="version", version=f"gtransform {__version__} (csv schema {CSV_SCHEMA_VERSION})"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="pmf cutoff of the scan window")
        p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    qq = sub.add_parser("qq", help="Q-Q step table of a discrete family (default binomial 101 0.5)")
    _add_family_args(qq)
    qq.add_argument("--ref", choices=REFERENCES, default="gaussian")
    qq.add_argument("--stat", choices=STATISTICS, default="signed-g")
    common(qq)

    bounds = sub.add_parser("bounds", help="exact tails against exp(-D)")
    _add_family_args(bounds)
    common(bounds)

    check = sub.add_parser("check", help="verify a property over a grid")
    check.add_argument("property", choices=CHECKS)
    _add_family_args(check)
    check.add_argument("--grid", help="'default' (all default grids) or a file with one family per line")
    check.add_argument("--poisson-grid", help="'default' or a list of means")
    check.add_argument("--binomial-grid", help="'default' or a list of N:P items")
    check.add_argument("--geometric-grid", help="'default' or a list of means")
    check.add_argument("--shapes", default="default", help="gamma shapes for gamma-order")
    check.add_argument("--points", type=int, default=500, help="t points per shape for gamma-order")
    check.add_argument("--m", default="1..100", help="outcomes for link, a..b or a list")
    check.add_argument("--t", default="default", help="'default' or a list of Poisson means for link")
    check.add_argument("--signed", action="store_true", help="skewed: search the signed comparison instead")
    check.add_argument("--all", action="store_true", help="write every record, not only findings")
    check.add_argument("--jobs", type=int, default=1, help="worker processes")
    common(check)
    return parser


COMMANDS = {"qq": cmd_qq, "bounds": cmd_bounds, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not (0.0 < args.threshold < 1e-6) or not math.isfinite(args.threshold):
        _note(f"gtransform: error: threshold must lie in (0, 1e-6), got {args.threshold!r}")
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, ConvergenceError, OSError) as exc:
        _note(f"gtransform: error: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
