import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordcover import circle
from ordcover.circle import (InvariantError, PLLift, PreconditionError, compose, evaluate, evaluate_inverse,
                             geometric_positive, has_fixed_point, invert, random_pl,
                             translation_number_enclosure, translation_number_enclosures, witness_nonmaximal)

F = Fraction
tau = PLLift.translation


def half_map():
    return PLLift((F(0), F(1, 2)), (F(1, 2), F(3, 4)))


def brute_eval(f, x):
    """Reference evaluation: reduce x by hand and interpolate on the segment list."""
    n = x.numerator // x.denominator
    r = x - n
    pts = list(zip(f.breakpoints, f.values)) + [(F(1), f.values[0] + 1)]
    for (x0, v0), (x1, v1) in zip(pts, pts[1:]):
        if x0 <= r < x1:
            return v0 + (v1 - v0) * (r - x0) / (x1 - x0) + n
    raise AssertionError("unreachable")


@st.composite
def pl_lifts(draw, max_k=5):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    k = draw(st.integers(1, max_k))
    return random_pl(seed, k)


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=50)


# -- construction ---------------------------------------------------------------

def test_invariants_are_enforced():
    with pytest.raises(InvariantError):
        PLLift((F(0), F(1, 2)), (F(1, 2), F(1, 4)))
    with pytest.raises(InvariantError):
        PLLift((F(1, 4),), (F(0),))
    with pytest.raises(InvariantError):
        PLLift((F(0), F(1, 2)), (F(0), F(1)))
    with pytest.raises(InvariantError):
        PLLift((), ())


def test_collinear_breakpoints_are_pruned():
    f = PLLift((F(0), F(1, 3), F(2, 3)), (F(1, 5), F(1, 5) + F(1, 3), F(1, 5) + F(2, 3)))
    assert f == tau(F(1, 5))


def test_random_pl_single_breakpoint_is_translation():
    assert random_pl(3, 1).is_translation


def test_random_pl_is_deterministic():
    assert random_pl(123, 4) == random_pl(123, 4)


def test_random_pl_draws_satisfy_invariants():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        f = random_pl(rng, int(rng.integers(1, 6)))
        PLLift(f.breakpoints, f.values)  # revalidates
        assert all(s > 0 for s in f.slopes())


# -- evaluation and group law ---------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(PLLift.identity(), F(7, 3)) == F(7, 3)
    assert evaluate(tau(F(1, 4)), F(1, 2)) == F(3, 4)
    assert evaluate(half_map(), F(1, 4)) == F(5, 8)


def test_compose_translations():
    assert compose(tau(F(1, 3)), tau(F(1, 4))) == tau(F(7, 12))


def test_self_composition_of_half_map():
    f = half_map()
    ff = compose(f, f)
    # f(f(0)) = f(1/2) = 3/4
    assert ff(0) == F(3, 4)
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = F(int(rng.integers(-40, 40)), int(rng.integers(1, 17)))
        assert ff(x) == brute_eval(f, brute_eval(f, x))


def test_invert_examples():
    assert invert(tau(F(2, 5))) == tau(F(-2, 5))
    assert invert(PLLift.identity()) == PLLift.identity()


def test_inverse_round_trip_on_random_maps():
    rng = np.random.default_rng(2)
    for _ in range(100):
        f = random_pl(rng, 4)
        assert compose(f, invert(f)) == PLLift.identity()
        assert compose(invert(f), f) == PLLift.identity()


@settings(max_examples=60, deadline=None)
@given(pl_lifts(), rationals)
def test_evaluate_matches_reference(f, x):
    assert evaluate(f, x) == brute_eval(f, x)
    assert evaluate(f, x + 1) == evaluate(f, x) + 1
    assert evaluate_inverse(f, evaluate(f, x)) == x


@settings(max_examples=40, deadline=None)
@given(pl_lifts(), pl_lifts(), pl_lifts())
def test_composition_is_associative(f, g, h):
    assert compose(compose(f, g), h) == compose(f, compose(g, h))


@settings(max_examples=40, deadline=None)
@given(pl_lifts(), pl_lifts(), rationals)
def test_composition_evaluates_pointwise(f, g, x):
    assert compose(f, g)(x) == brute_eval(f, brute_eval(g, x))


@settings(max_examples=40, deadline=None)
@given(pl_lifts())
def test_json_round_trip(f):
    text = circle.to_json(f)
    assert circle.from_json(text) == f
    assert json.loads(text)["type"] == "pl"


def test_json_parse_rejects_bad_maps():
    with pytest.raises(InvariantError):
        circle.from_json('{"type": "pl", "breakpoints": ["0", "1/2"], "values": ["1/2", "1/4"]}')
    with pytest.raises(InvariantError):
        circle.from_json('{"type": "sl2cover"}')


# -- translation numbers ------------------------------------------------------------------

def test_translation_enclosure_examples():
    e = translation_number_enclosure(tau(F(1, 3)), 9)
    assert (e.lo, e.hi) == (F(2, 9), F(4, 9))
    e = translation_number_enclosure(PLLift.identity(), 17)
    assert (e.lo, e.hi) == (F(-1, 17), F(1, 17))


def test_exact_iteration_width_is_two_over_n():
    f = random_pl(4, 4)
    for n in (1, 7, 256):
        assert translation_number_enclosure(f, n).width == F(2, n)


def test_long_orbit_encloses_exact_orbit_point():
    # independent oracle: exact rational point iteration
    rng = np.random.default_rng(9)
    for _ in range(20):
        f = random_pl(rng, 4)
        x = F(0)
        for _ in range(600):
            x = evaluate(f, x)
        bounds, _ = circle.orbit_enclosures(f, [600])
        lo, hi = bounds[600]
        assert lo <= x <= hi


def test_chains_stay_tight_for_a_contracting_map():
    f = half_map()
    x = F(0)
    for _ in range(600):
        x = evaluate(f, x)
    lo, hi = circle.orbit_enclosures(f, [600])[0][600]
    assert lo <= x <= hi
    assert hi - lo < F(1, 10 ** 9)


def test_semistable_fixed_point_loosens_chains_but_keeps_soundness():
    # F(x) - x + 1 >= 0 touches 0 at the integers: outward rounding walks the
    # upper chain through them
    f = PLLift((F(0), F(1, 15), F(1, 12), F(6, 13)), (F(-1), F(-2, 7), F(-1, 4), F(-1, 6)))
    lo, hi = circle.orbit_enclosures(f, [600])[0][600]
    assert lo <= -600 <= hi
    assert hi - lo > 6


def test_semistable_fixed_point_falls_back_to_exact_rational_T():
    f = PLLift((F(0), F(1, 15), F(1, 12), F(6, 13)), (F(-1), F(-2, 7), F(-1, 4), F(-1, 6)))
    assert circle.exact_rational_translation(f, F(-2), F(0)) == -1
    e = translation_number_enclosure(f, 600)
    assert (e.lo, e.hi) == (F(-1) - F(1, 600), F(-1) + F(1, 600))


def test_exact_rational_translation_rejects_irrational_candidates():
    # f = tau(1/3) has T = 1/3, not in [0.34, 0.5] with small period
    assert circle.exact_rational_translation(tau(F(1, 3)), F(17, 50), F(1, 2), 10) is None
    assert circle.exact_rational_translation(tau(F(1, 3)), F(0), F(1, 2)) == F(1, 3)


def test_half_map_self_consistency_at_two_precisions():
    f = half_map()
    n = 1 << 20
    encs = translation_number_enclosures(f, [n, 2 * n])
    a, b = encs[n], encs[2 * n]
    assert a.width <= F(2, n) * (1 + F(1, 10 ** 6))
    assert abs(a.mid - b.mid) <= F(1, 2 ** 19)
    assert a.overlaps(b)


@settings(max_examples=25, deadline=None)
@given(pl_lifts())
def test_midpoints_at_n_and_2n_agree(f):
    n = 1 << 12
    encs = translation_number_enclosures(f, [n, 2 * n])
    assert abs(encs[n].mid - encs[2 * n].mid) <= F(3, 2 * n) * (1 + F(1, 10 ** 6))


@settings(max_examples=25, deadline=None)
@given(pl_lifts(), pl_lifts())
def test_conjugation_invariance_of_T(g, h):
    c = compose(h, compose(g, invert(h)))
    n = 1 << 12
    assert translation_number_enclosure(c, n).overlaps(translation_number_enclosure(g, n))


def test_translation_enclosure_rejects_zero_precision():
    with pytest.raises(ValueError):
        translation_number_enclosure(tau(1), 0)


# -- order decisions -------------------------------------------------------------------

def test_geometric_positive_examples():
    assert geometric_positive(tau(F(1, 4)), strict=True).is_yes
    assert geometric_positive(PLLift.identity(), strict=True).is_no
    assert geometric_positive(PLLift.identity()).is_yes
    v = geometric_positive(half_map(), strict=True)
    assert v.is_yes and v.certificate["min_delta"] == F(1, 4)


@settings(max_examples=50, deadline=None)
@given(pl_lifts())
def test_positivity_agrees_with_dense_sampling(f):
    xs = [F(i, 97) for i in range(97)] + list(f.breakpoints)
    dense_min = min(evaluate(f, x) - x for x in xs)
    # breakpoints are included, so the dense minimum is the true minimum
    assert geometric_positive(f).is_yes == (dense_min >= 0)
    assert geometric_positive(f, strict=True).is_yes == (dense_min > 0)


def test_has_fixed_point_examples():
    assert has_fixed_point(PLLift.identity()).is_yes
    assert has_fixed_point(tau(F(1, 5))).is_no
    assert has_fixed_point(PLLift((F(0), F(1, 2)), (F(-1, 8), F(5, 8)))).is_yes


def test_witness_for_negative_translation():
    h, gh = witness_nonmaximal(tau(F(-1, 4)), F(1, 8))
    assert h == tau(F(1, 8))
    assert gh == tau(F(-1, 8))
    assert geometric_positive(gh, strict=True).is_no


def test_witness_rejects_positive_input():
    with pytest.raises(PreconditionError) as err:
        witness_nonmaximal(PLLift.identity(), F(1, 8))
    assert err.value.delta == 0
    with pytest.raises(PreconditionError):
        witness_nonmaximal(tau(F(-1, 4)), F(1, 2))


def test_witness_on_map_with_min_delta_minus_third():
    g = PLLift((F(0), F(1, 2)), (F(-1, 3), F(1, 3)))
    assert circle.min_delta(g) == F(-1, 3)
    h, gh = witness_nonmaximal(g, F(1, 6))
    assert geometric_positive(h, strict=True).is_yes
    assert geometric_positive(gh, strict=True).is_no
    assert compose(g, h) == gh


def test_oracle_conforms_to_interface():
    o = circle.CircleOracle()
    e = o.identity
    assert o.positive(e).is_yes and o.strictly_positive(e).is_no
    g = o.sample(np.random.default_rng(0))
    assert o.equal(o.mul(g, o.inv(g)), e)
