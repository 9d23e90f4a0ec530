import json
from fractions import Fraction

import numpy as np
import pytest

from ordcover import circle, qm_core, sl2
from ordcover.circle import CircleOracle, PLLift
from ordcover.qm_core import (AssertionResult, Enclosure, Report, SandwichConstants, State, Tally, Verdict,
                              coboundary_enclosure, conjugation_invariance_check, defect_estimate,
                              dominant_member, falsify_maximal_formula, homogeneity_check, maximal_member,
                              naive_positive_member)

tau = PLLift.translation
H = CircleOracle()


def half_map():
    return PLLift((Fraction(0), Fraction(1, 2)), (Fraction(1, 2), Fraction(3, 4)))


# -- Enclosure / Verdict ---------------------------------------------------------

def test_enclosure_keeps_floats_exact():
    e = Enclosure(0.1, 0.3)
    assert e.lo == Fraction(0.1)
    assert e.contains(Fraction(0.2))


def test_enclosure_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Enclosure(1, 0)


def test_enclosure_arithmetic():
    a, b = Enclosure(1, 2), Enclosure(Fraction(1, 2), 1)
    assert a + b == Enclosure(Fraction(3, 2), 3)
    assert a - b == Enclosure(0, Fraction(3, 2))
    assert -a == Enclosure(-2, -1)
    assert 3 * b == Enclosure(Fraction(3, 2), 3)
    assert abs(Enclosure(-1, 2)) == Enclosure(0, 2)
    assert abs(Enclosure(-3, -1)) == Enclosure(1, 3)
    assert a.width == 1 and a.mid == Fraction(3, 2)


def test_enclosure_comparisons():
    e = Enclosure(Fraction(1, 4), Fraction(1, 2))
    assert e.above(0) and not e.above(Fraction(1, 4))
    assert e.below(1) and not e.below(Fraction(1, 2))
    assert e.overlaps(Enclosure(Fraction(1, 2), 1))
    assert not e.overlaps(Enclosure(Fraction(3, 4), 1))


def test_verdict_refuses_truthiness():
    with pytest.raises(TypeError):
        bool(Verdict.yes())


def test_verdict_from_bool():
    assert Verdict.from_bool(True).is_yes
    assert Verdict.from_bool(False).is_no
    assert Verdict.unknown().state is State.UNKNOWN


def test_sandwich_constants():
    s = SandwichConstants.from_defect_bound(1)
    assert s.C1 == Fraction(101, 100) and s.C2 == 0
    with pytest.raises(ValueError):
        SandwichConstants(0)


# -- operations on the circle oracle -------------------------------------------------

def test_defect_vanishes_on_translations():
    enc = defect_estimate(H, [(tau(Fraction(1, 2)), tau(Fraction(1, 3)))], 64)
    assert enc.contains(0)


def test_defect_vanishes_on_identity_pair():
    e = PLLift.identity()
    assert defect_estimate(H, [(e, e)], 16).contains(0)
    z = sl2.CoverElement.identity()
    assert defect_estimate(sl2.CoverOracle(), [(z, z)], 16).contains(0)


def test_defect_estimate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        defect_estimate(H, [], 16)
    with pytest.raises(ValueError):
        defect_estimate(H, [(tau(1), tau(1))], 0)


def test_defect_refinement_matches_full_precision():
    rng = np.random.default_rng(5)
    pairs = [(circle.random_pl(rng, 4), circle.random_pl(rng, 4)) for _ in range(40)]
    n = 1 << 14
    full = [abs(coboundary_enclosure(H, g, h, n)) for g, h in pairs]
    refined = defect_estimate(H, pairs, n)
    assert refined.lo == max(t.lo for t in full)
    assert refined.hi <= max(t.hi for t in qm_core.coboundary_terms(H, pairs, qm_core.COARSE_PRECISION))


def test_defect_on_random_pairs_stays_below_one():
    rng = np.random.default_rng(11)
    pairs = [(H.sample(rng), H.sample(rng)) for _ in range(200)]
    n = 1 << 20
    enc = defect_estimate(H, pairs, n)
    assert enc.mid <= 1 + Fraction(4, n)


def test_homogeneity():
    assert homogeneity_check(H, tau(Fraction(1, 3)), 5, 64).is_yes
    assert homogeneity_check(H, circle.random_pl(3, 4), 8, 1 << 20).is_yes
    assert homogeneity_check(sl2.CoverOracle(), sl2.central(1), 5, 64).is_yes
    with pytest.raises(ValueError):
        homogeneity_check(H, tau(1), 1, 64)


def test_conjugation_invariance():
    h = circle.random_pl(8, 4)
    assert conjugation_invariance_check(H, tau(Fraction(1, 2)), h, 256).is_yes
    assert conjugation_invariance_check(H, PLLift.identity(), h, 256).is_yes
    ell = sl2.random_cover_element(1, "elliptic")
    hyp = sl2.random_cover_element(2, "hyperbolic")
    assert conjugation_invariance_check(sl2.CoverOracle(), ell, hyp, 1 << 16).is_yes


def test_naive_positive_member():
    assert naive_positive_member(H, tau(2), 1, 64).is_yes
    assert naive_positive_member(H, PLLift.identity(), 5, 64).is_yes
    assert naive_positive_member(H, tau(Fraction(1, 2)), 1, 64).is_no


def test_maximal_member():
    assert maximal_member(H, tau(Fraction(1, 4))).is_yes
    assert maximal_member(H, tau(Fraction(-1, 4))).is_no
    assert maximal_member(H, half_map()).is_yes


def test_dominant_member():
    assert dominant_member(H, tau(Fraction(1, 3)), 64).is_yes
    assert dominant_member(H, PLLift.identity(), 64).is_no
    parabolic = sl2.exp_cover(sl2.LieAlgebraElement(0, 0, 1), 1)
    assert dominant_member(sl2.CoverOracle(), parabolic, 1 << 12).is_no


def test_falsify_maximal_formula():
    e = PLLift.identity()
    assert falsify_maximal_formula(H, tau(Fraction(-1, 4)), [e]) == e
    rng = np.random.default_rng(2)
    trials = [circle.random_pl(rng, 3) for _ in range(100)]
    assert falsify_maximal_formula(H, tau(Fraction(1, 4)), trials) is None
    g = half_map()
    assert falsify_maximal_formula(H, g, [circle.power(g, k) for k in range(1, 5)]) is None


# -- reports ------------------------------------------------------------------------

def test_report_round_trip():
    r = Report("axioms", 42, 3, 64, [AssertionResult("closure", "fail", 3, 0, 1, {"f": Fraction(1, 3)})],
               {"observed_max": Fraction(2, 3)})
    text = r.to_json()
    assert json.loads(text)["assertions"][0]["counterexample"] == {"f": "1/3"}
    assert Report.from_json(text).to_json() == text


def test_tally_statuses():
    t = Tally(unknown_ceiling=0.1)
    for _ in range(9):
        t.record("a", True)
    t.record("a", None)
    t.record("b", None)
    t.record("b", True)
    t.record("c", False, {"x": 1})
    status = {r.name: r for r in t.results()}
    assert status["a"].status == "pass"
    assert status["b"].status == "unknown"
    assert status["c"].status == "fail" and status["c"].counterexample == {"x": 1}


def test_tally_implication_is_vacuous_without_premise():
    t = Tally()
    t.implication("p", Verdict.no(), Verdict.no())
    t.implication("p", Verdict.unknown(), Verdict.no())
    t.declare("p")
    assert t.results()[0].checked == 0


def test_rng_streams_are_reproducible():
    a = [r.integers(0, 1 << 30) for r in qm_core.rng_streams(7, 4)]
    b = [r.integers(0, 1 << 30) for r in qm_core.rng_streams(7, 4)]
    assert a == b and len(set(a)) == 4


def test_indexed_map_preserves_order(monkeypatch):
    monkeypatch.setenv("ORDCOVER_THREADS", "3")
    assert qm_core.thread_count() == 3
    assert qm_core.indexed_map(lambda x: x * x, list(range(50))) == [x * x for x in range(50)]


def test_axioms_suite_on_identity_sample():
    r = qm_core.axioms_suite(H, 1, 0, 64, samples=[PLLift.identity()])
    assert r.ok


def test_axioms_suite_small_circle_run_is_deterministic():
    a = qm_core.axioms_suite(H, 40, 3, 64)
    b = qm_core.axioms_suite(H, 40, 3, 64)
    assert a.ok
    assert a.to_json() == b.to_json()


def test_axioms_suite_sets_boundary_premises_apart():
    o = sl2.CoverOracle()
    samples = [o.sample(r) for r in qm_core.rng_streams(42, 500)][36:40]
    g, k = samples[0], samples[2]
    # an exact parabolic: positive, not strictly, and its float conjugate is undecidable
    assert o.positive(g).is_yes and o.strictly_positive(g).is_no
    assert o.positive(o.conj(k, g)).is_unknown
    r = qm_core.axioms_suite(o, 4, 42, 256, samples=samples)
    assert r.metrics["boundary_undecidable"]["conjugation_stability"] >= 1
    stab = next(a for a in r.assertions if a.name == "conjugation_stability")
    assert stab.unknown == 0 and stab.failed == 0
