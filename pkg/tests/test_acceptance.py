"""Acceptance gate: one PASS/FAIL line per criterion, with runtime limits.

The lines are collected in ``RESULTS`` and printed in the pytest terminal
summary (see ``conftest.py``).
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from ordcover import circle, sl2
from ordcover.qm_core import coboundary_terms, rng_streams
from ordcover.suites import SuiteConfig, run_suite

RESULTS: list[str] = []
SEED = 42


def record(number, title, ok, elapsed, limit, detail):
    ok = ok and elapsed < limit
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}: {detail} [{elapsed:.1f}s < {limit}s]")
    print(RESULTS[-1])
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def assertion(report, name):
    return next(a for a in report.assertions if a.name == name)


def suite(group, name, samples, precision, seed=SEED):
    return run_suite(SuiteConfig(group, name, samples, seed, precision))


def test_01_translation_number_exactness():
    rng = np.random.default_rng(SEED)
    n = 1000

    def run():
        bad = 0
        for _ in range(100):
            q = int(rng.integers(1, 1000))
            r = Fraction(int(rng.integers(-5 * q, 5 * q + 1)), q)
            e = circle.translation_number_enclosure(circle.PLLift.translation(r), n)
            bad += not (e.contains(r) and e.width == Fraction(2, n))
        return bad

    bad, dt = timed(run)
    assert record(1, "translation-number exactness", bad == 0, dt, 1, f"{100 - bad}/100 rationals exact, width 2/n")


def test_02_strict_positivity_iff_positive_translation_number():
    report, dt = timed(lambda: suite("circle", "dominants", 1000, 1 << 20))
    iff = assertion(report, "strict_positive_iff_T_positive")
    fp = assertion(report, "fixed_point_implies_T_zero")
    ok = report.ok and iff.failed == 0 and fp.failed == 0
    detail = (f"{iff.checked} maps checked, {report.metrics['skipped_near_zero']} in the exclusion band, "
              f"{iff.failed + fp.failed} disagreements")
    assert record(2, "strict positivity iff T > 0", ok, dt, 60, detail)


def test_03_maximal_order_witnesses():
    report, dt = timed(lambda: suite("circle", "coincidence", 500, 1 << 12))
    h = assertion(report, "witness_h_strictly_positive")
    gh = assertion(report, "witness_gh_not_strictly_positive")
    ok = report.ok and h.checked == gh.checked == 500
    assert record(3, "maximal-order witnesses", ok, dt, 30, f"{h.checked - h.failed}/500 exact witnesses")


def test_04_order_axioms_in_both_groups():
    (circ, ring), dt = timed(lambda: (suite("circle", "axioms", 500, 1 << 12), suite("sl2", "axioms", 500, 1 << 12)))
    failed = sum(a.failed for a in circ.assertions + ring.assertions)
    unknown = sum(a.unknown for a in ring.assertions)
    ok = circ.ok and ring.ok and failed == 0
    aside = sum(ring.metrics["boundary_undecidable"].values()) + sum(circ.metrics["boundary_undecidable"].values())
    detail = (f"{failed} failures over {len(circ.assertions) + len(ring.assertions)} assertions, {unknown} unknown, "
              f"{aside} boundary premises set aside")
    assert record(4, "order axioms", ok, dt, 60, detail)


def test_05_defect_sampling_on_circle_maps():
    n = 1 << 20
    oracle = circle.CircleOracle()

    def run():
        pairs = [(oracle.sample(r), oracle.sample(r)) for r in rng_streams(SEED, 10_000)]
        return coboundary_terms(oracle, pairs, n)

    terms, dt = timed(run)
    top = max(t.mid for t in terms)
    exceed = sum(t.lo > 1 for t in terms)
    ok = Fraction(1, 2) < top <= 1 + Fraction(4, n) and exceed == 0
    assert record(5, "defect sampling", ok, dt, 120,
                  f"observed max {float(top):.6f}, {exceed} pairs above 1 beyond their widths")


def test_06_mu_matches_translation_number():
    report, dt = timed(lambda: suite("sl2", "defect", 300, 1 << 14))
    a = assertion(report, "mu_matches_T")
    ok = a.status == "pass" and a.checked == 300
    assert record(6, "quasimorphism uniqueness", ok, dt, 120, f"{a.checked - a.failed}/300 elements agree")


def test_07_cone_and_wedge_agree():
    report, dt = timed(lambda: suite("sl2", "wedge", 500, 1 << 12))
    a = assertion(report, "cone_wedge_agreement")
    ok = report.ok and a.failed == 0 and a.unknown == 0
    detail = f"{a.checked} decided, {a.failed} disagreements, {report.metrics['cone_members']} cone members"
    assert record(7, "wedge/cone agreement", ok, dt, 60, detail)


def test_08_cone_products_are_positive():
    report, dt = timed(lambda: suite("sl2", "coincidence", 500, 1 << 12))
    a = assertion(report, "cone_products_positive")
    ok = a.failed == 0 and a.unknown < 5
    assert record(8, "coincidence inclusion", ok, dt, 60, f"{a.failed} No, {a.unknown} Unknown of 500")


def test_09_trichotomy():
    report, dt = timed(lambda: suite("sl2", "trichotomy", 1000, 1 << 12))
    a = assertion(report, "at_least_one_flag")
    ok = a.failed == 0 and a.unknown < 10
    assert record(9, "Hilgert-Hofmann trichotomy", ok, dt, 120, f"{a.failed} contradictions, {a.unknown} undecided")


def test_10_dominance_equivalence():
    report, dt = timed(lambda: suite("sl2", "dominants", 300, 1 << 14))
    a = assertion(report, "dominance_equivalence")
    decidable = a.checked - a.unknown
    ok = a.failed == 0 and decidable >= 300
    assert record(10, "dominance equivalence", ok, dt, 120, f"{decidable} decidable, {a.failed} disagreements")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
