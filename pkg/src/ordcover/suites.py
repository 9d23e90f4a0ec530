"""Verification suites for the two concrete groups.

Each suite samples deterministically from ``seed``, certifies every premise
and conclusion, and returns a :class:`~ordcover.qm_core.Report`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import circle, sl2
from .qm_core import (DEFAULT_UNKNOWN_CEILING, Report, Tally, axioms_suite, coboundary_terms,
                      indexed_map, rng_streams)

GROUPS = ("circle", "sl2")
SUITES = ("axioms", "dominants", "coincidence", "trichotomy", "wedge", "defect")
WEDGE_TIMES = (0.1, 1.0, 3.0)
CONE_MARGIN = 1e-6
MAX_POWER = 8
MAX_FACTORS = 6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    group: str
    suite: str
    sample_count: int
    seed: int
    precision: int
    budget: int = sl2.DEFAULT_BUDGET
    unknown_ceiling: float = DEFAULT_UNKNOWN_CEILING

    def validate(self):
        if self.group not in GROUPS:
            raise ConfigError(f"unknown group {self.group!r}; expected one of {GROUPS}")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; expected one of {SUITES}")
        if (self.group, self.suite) not in _RUNNERS:
            raise ConfigError(f"suite {self.suite!r} is not defined for group {self.group!r}")
        if self.sample_count < 1:
            raise ConfigError("sample_count must be >= 1")
        if self.precision < 1:
            raise ConfigError("precision must be >= 1")
        if self.budget < 64:
            raise ConfigError("budget must be >= 64")
        if not 0 <= self.unknown_ceiling <= 1:
            raise ConfigError("unknown_ceiling must lie in [0, 1]")
        return self


def _power_checkpoints(precision: int) -> list[int]:
    out, n = [], 1
    while n <= precision:
        out.append(n)
        n *= 2
    return out


# -- circle ------------------------------------------------------------------

def circle_axioms(cfg: SuiteConfig) -> Report:
    return axioms_suite(circle.CircleOracle(), cfg.sample_count, cfg.seed, cfg.precision,
                        unknown_ceiling=cfg.unknown_ceiling)


def circle_dominants(cfg: SuiteConfig) -> Report:
    """Strict positivity against positivity of the translation number.

    Maps whose minimal displacement lies in ``(-1/n, 0]`` are skipped; the
    enclosures cannot resolve them at precision ``n``.
    """
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("strict_positive_iff_T_positive", "fixed_point_implies_T_zero")
    ns = _power_checkpoints(cfg.precision)
    maps = [circle.random_pl(r, k=int(r.integers(1, 5))) for r in rng_streams(cfg.seed, cfg.sample_count)]
    skipped = 0

    def check(f):
        encs = circle.translation_number_enclosures(f, ns)
        return circle.geometric_positive(f, strict=True), circle.has_fixed_point(f), encs

    for f, (strict, fixed, encs) in zip(maps, indexed_map(check, maps)):
        m = circle.min_delta(f)
        cex = {"f": f.to_json_obj(), "min_delta": m}
        if -Fraction(1, cfg.precision) < m <= 0:
            skipped += 1
        else:
            above = any(e.lo > 0 for e in encs.values())
            tally.record("strict_positive_iff_T_positive", strict.is_yes == above, cex)
        if fixed.is_yes:
            tally.record("fixed_point_implies_T_zero", all(e.contains(0) for e in encs.values()), cex)
    report = Report("dominants", cfg.seed, cfg.sample_count, cfg.precision, tally.results())
    report.metrics["skipped_near_zero"] = skipped
    return report


def circle_coincidence(cfg: SuiteConfig) -> Report:
    """Every non-positive map is non-maximal, witnessed exactly."""
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("witness_h_strictly_positive", "witness_gh_not_strictly_positive")
    found = 0
    for r in rng_streams(cfg.seed, cfg.sample_count):
        g = circle.random_pl(r, k=int(r.integers(1, 5)))
        while circle.geometric_positive(g).is_yes:
            g = circle.random_pl(r, k=int(r.integers(1, 5)))
        found += 1
        h, gh = circle.witness_nonmaximal(g, -circle.min_delta(g) / 2)
        cex = {"g": g.to_json_obj(), "h": h.to_json_obj()}
        tally.record("witness_h_strictly_positive", circle.geometric_positive(h, strict=True).is_yes, cex)
        tally.record("witness_gh_not_strictly_positive", circle.geometric_positive(gh, strict=True).is_no, cex)
    return Report("coincidence", cfg.seed, cfg.sample_count, cfg.precision, tally.results())


def _defect_report(cfg: SuiteConfig, oracle, tally: Tally, name: str):
    streams = rng_streams(cfg.seed, cfg.sample_count)
    pairs = [(oracle.sample(r), oracle.sample(r)) for r in streams]
    terms = coboundary_terms(oracle, pairs, cfg.precision)
    tally.declare("coboundary_at_most_one", "observed_max_within_bound")
    for (g, h), t in zip(pairs, terms):
        tally.record("coboundary_at_most_one", t.lo <= 1,
                     {"g": oracle.encode(g), "h": oracle.encode(h), "coboundary": t})
    top = max(terms, key=lambda t: t.mid)
    hull_lo, hull_hi = max(t.lo for t in terms), max(t.hi for t in terms)
    tally.record("observed_max_within_bound", top.mid <= 1 + Fraction(4, cfg.precision), {"observed": top})
    return Report(name, cfg.seed, cfg.sample_count, cfg.precision, tally.results(),
                  {"observed_max": top.mid, "observed_max_float": float(top.mid),
                   "max_enclosure": {"lo": hull_lo, "hi": hull_hi}})


def circle_defect(cfg: SuiteConfig) -> Report:
    return _defect_report(cfg, circle.CircleOracle(), Tally(cfg.unknown_ceiling), "defect")


# -- sl2 -------------------------------------------------------------------------

def _cover_samples(cfg: SuiteConfig):
    return [sl2.random_cover_element(r, sl2.CLASSES[int(r.integers(0, len(sl2.CLASSES)))])
            for r in rng_streams(cfg.seed, cfg.sample_count)]


def sl2_axioms(cfg: SuiteConfig) -> Report:
    return axioms_suite(sl2.CoverOracle(cfg.budget), cfg.sample_count, cfg.seed, cfg.precision,
                        unknown_ceiling=cfg.unknown_ceiling)


def dominance_outcome(g: sl2.CoverElement, precision: int, budget: int):
    """``(mu_enclosure, some_power_positive)``; the latter is None when undecidable.

    A sample is decidable when its mu-enclosure excludes 0 or a fixed point
    is certified, and the powers ``g^n`` (``n <= 8``) are either certified
    strictly positive for some ``n`` or certified not so for all of them.
    """
    mu = sl2.gw_mu(g, precision)
    if not (mu.lo > 0 or mu.hi < 0 or sl2.has_fixed_point(g, budget).is_yes):
        return mu, None
    undecided = False
    for n in range(1, MAX_POWER + 1):
        v = sl2.power_positive(g, n, strict=True, budget=budget)
        if v.is_yes:
            return mu, True
        undecided |= v.is_unknown
    return mu, None if undecided else False


def sl2_dominants(cfg: SuiteConfig) -> Report:
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("dominance_equivalence")
    samples = _cover_samples(cfg)
    for g, (mu, pos) in zip(samples, indexed_map(lambda g: dominance_outcome(g, cfg.precision, cfg.budget),
                                                  samples)):
        tally.record("dominance_equivalence", None if pos is None else pos == (mu.lo > 0),
                     {"g": g.to_json_obj(), "mu": mu, "some_power_positive": pos})
    return Report("dominants", cfg.seed, cfg.sample_count, cfg.precision, tally.results())


def random_cone_product(rng, max_factors: int = MAX_FACTORS):
    """Product of up to ``max_factors`` exponentials of cone elements at positive times."""
    factors = []
    g = sl2.CoverElement.identity()
    for _ in range(int(rng.integers(1, max_factors + 1))):
        X, t = sl2.random_cone_element(rng), float(rng.uniform(0.01, 2.0))
        factors.append((X, t))
        g = sl2.mul(g, sl2.exp_cover(X, t))
    return g, factors


def sl2_coincidence(cfg: SuiteConfig) -> Report:
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("cone_products_positive")
    for r in rng_streams(cfg.seed, cfg.sample_count):
        g, factors = random_cone_product(r)
        v = sl2.geometric_positive(g, False, cfg.budget)
        tally.record("cone_products_positive", None if v.is_unknown else v.is_yes,
                     {"g": g.to_json_obj(), "factors": [[X.a, X.b, X.c, t] for X, t in factors]})
    return Report("coincidence", cfg.seed, cfg.sample_count, cfg.precision, tally.results())


def sl2_trichotomy(cfg: SuiteConfig) -> Report:
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("at_least_one_flag")
    samples = _cover_samples(cfg)
    for g, c in zip(samples, indexed_map(lambda g: sl2.hilgert_hofmann_classify(g, cfg.budget), samples)):
        outcome = True if c.decided else (False if c.contradicts else None)
        tally.record("at_least_one_flag", outcome,
                     {"g": g.to_json_obj(), "flags": [v.state.value for v in c.flags]})
    return Report("trichotomy", cfg.seed, cfg.sample_count, cfg.precision, tally.results())


def random_wedge_sample(rng, margin: float = CONE_MARGIN) -> sl2.LieAlgebraElement:
    """Alternates Gaussian draws with cone draws of random sign, at least
    ``margin`` (relative) from the cone boundary."""
    while True:
        if rng.random() < 0.5:
            X = sl2.random_lie_algebra(rng)
        else:
            X = sl2.random_cone_element(rng).scaled(float(rng.choice([-1.0, 1.0])))
        if abs(sl2.BoundaryVectorField.of(X).minimum) * 3.141592653589793 >= margin * X.norm():
            return X


def sl2_wedge(cfg: SuiteConfig) -> Report:
    tally = Tally(cfg.unknown_ceiling)
    tally.declare("cone_wedge_agreement")
    xs = [random_wedge_sample(r) for r in rng_streams(cfg.seed, cfg.sample_count)]

    def check(X):
        return sl2.cone_contains(X), sl2.wedge_member(X, WEDGE_TIMES, cfg.budget)

    cone_yes = 0
    for X, (cone, wedge) in zip(xs, indexed_map(check, xs)):
        cone_yes += cone.is_yes
        outcome = None if cone.is_unknown or wedge.is_unknown else cone.state is wedge.state
        tally.record("cone_wedge_agreement", outcome,
                     {"X": [X.a, X.b, X.c], "cone": cone.state.value, "wedge": wedge.state.value})
    report = Report("wedge", cfg.seed, cfg.sample_count, cfg.precision, tally.results())
    report.metrics["cone_members"] = cone_yes
    return report


def mu_matches_T(g: sl2.CoverElement, precision: int):
    """``|mid(mu) - mid(T)| <= 2^-10 + width(mu) + width(T)``, with both enclosures."""
    mu = sl2.gw_mu(g, precision)
    T = sl2.translation_number_enclosure(g, precision)
    return abs(mu.mid - T.mid) <= Fraction(1, 1024) + mu.width + T.width, mu, T


def sl2_defect(cfg: SuiteConfig) -> Report:
    tally = Tally(cfg.unknown_ceiling)
    oracle = sl2.CoverOracle(cfg.budget)
    tally.declare("mu_matches_T")
    for g in _cover_samples(cfg):
        ok, mu, T = mu_matches_T(g, cfg.precision)
        tally.record("mu_matches_T", ok, {"g": g.to_json_obj(), "mu": mu, "T": T})
    return _defect_report(cfg, oracle, tally, "defect")


_RUNNERS: dict[tuple[str, str], Callable[[SuiteConfig], Report]] = {
    ("circle", "axioms"): circle_axioms,
    ("circle", "dominants"): circle_dominants,
    ("circle", "coincidence"): circle_coincidence,
    ("circle", "defect"): circle_defect,
    ("sl2", "axioms"): sl2_axioms,
    ("sl2", "dominants"): sl2_dominants,
    ("sl2", "coincidence"): sl2_coincidence,
    ("sl2", "trichotomy"): sl2_trichotomy,
    ("sl2", "wedge"): sl2_wedge,
    ("sl2", "defect"): sl2_defect,
}


def run_suite(cfg: SuiteConfig) -> Report:
    cfg.validate()
    report = _RUNNERS[(cfg.group, cfg.suite)](cfg)
    report.metrics.setdefault("group", cfg.group)
    return report
