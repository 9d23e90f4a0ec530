"""Quasimorphisms and bi-invariant orders over an abstract group oracle.

A group is presented to this module through :class:`GroupOracle`: exact (or
certified) multiplication and inversion, a certified enclosure of the
homogeneous quasimorphism ``f``, and certified predicates for geometric
positivity.  Everything here is group-agnostic; the concrete groups live in
:mod:`ordcover.circle` and :mod:`ordcover.sl2`.
"""

from __future__ import annotations

import abc
import dataclasses
import enum
import json
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Any, Callable, Iterable, Sequence

import numpy as np

DEFAULT_DEFECT_BOUND = Fraction(1)
SANDWICH_MARGIN = Fraction(1, 100)
DEFAULT_UNKNOWN_CEILING = 0.01


class CertificateConflict(RuntimeError):
    """Two independent certified routes returned contradictory answers."""


def _as_fraction(x: Real) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"enclosure endpoint must be finite, got {x!r}")
    return Fraction(x)


@dataclass(frozen=True)
class Enclosure:
    """Closed interval ``[lo, hi]`` known to contain an exact value.

    Endpoints are stored as exact rationals (floats convert exactly), so the
    interval arithmetic below never needs directed rounding.
    """

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = _as_fraction(self.lo), _as_fraction(self.hi)
        if lo > hi:
            raise ValueError(f"empty enclosure [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: Real) -> "Enclosure":
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Real) -> bool:
        x = _as_fraction(x)
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def above(self, threshold: Real) -> bool:
        """True when every point of the interval exceeds ``threshold``."""
        return self.lo > _as_fraction(threshold)

    def below(self, threshold: Real) -> bool:
        return self.hi < _as_fraction(threshold)

    def __add__(self, other):
        if isinstance(other, Enclosure):
            return Enclosure(self.lo + other.lo, self.hi + other.hi)
        o = _as_fraction(other)
        return Enclosure(self.lo + o, self.hi + o)

    __radd__ = __add__

    def __neg__(self):
        return Enclosure(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Enclosure) else -_as_fraction(other))

    def __mul__(self, k):
        k = _as_fraction(k)
        a, b = self.lo * k, self.hi * k
        return Enclosure(min(a, b), max(a, b))

    __rmul__ = __mul__

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Enclosure(0, max(-self.lo, self.hi))

    def hull(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(min(self.lo, other.lo), max(self.hi, other.hi))

    def __str__(self):
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"


class State(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    """Tri-state certified answer.

    ``Verdict`` deliberately refuses truth-value coercion: an ``UNKNOWN`` must
    never be silently read as ``False``.
    """

    state: State
    certificate: Any = None

    @classmethod
    def yes(cls, certificate=None):
        return cls(State.YES, certificate)

    @classmethod
    def no(cls, certificate=None):
        return cls(State.NO, certificate)

    @classmethod
    def unknown(cls, certificate=None):
        return cls(State.UNKNOWN, certificate)

    @classmethod
    def from_bool(cls, value: bool, certificate=None):
        return cls(State.YES if value else State.NO, certificate)

    @property
    def is_yes(self) -> bool:
        return self.state is State.YES

    @property
    def is_no(self) -> bool:
        return self.state is State.NO

    @property
    def is_unknown(self) -> bool:
        return self.state is State.UNKNOWN

    def __bool__(self):
        raise TypeError("Verdict is tri-state; use .is_yes / .is_no / .is_unknown")

    def __str__(self):
        return self.state.name


@dataclass(frozen=True)
class SandwichConstants:
    """Thresholds with ``{f >= C1}`` inside the order semigroup and ``C2 = 0``."""

    C1: Fraction
    C2: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "C1", _as_fraction(self.C1))
        object.__setattr__(self, "C2", _as_fraction(self.C2))
        if self.C1 <= 0:
            raise ValueError("C1 must be positive")

    @classmethod
    def from_defect_bound(cls, defect_bound: Real, margin: Real = SANDWICH_MARGIN):
        return cls(_as_fraction(defect_bound) + _as_fraction(margin))


class GroupOracle(abc.ABC):
    """Capabilities a group must expose to the generic machinery.

    ``positive`` decides ``g >= e`` in the geometric order (``g.x >= x`` for
    all ``x``); ``strictly_positive`` decides ``g.x > x`` for all ``x``.
    """

    name: str = "abstract"
    identity: Any = None

    @abc.abstractmethod
    def mul(self, g, h): ...

    @abc.abstractmethod
    def inv(self, g): ...

    @abc.abstractmethod
    def equal(self, g, h) -> bool: ...

    @abc.abstractmethod
    def qm_enclosure(self, g, n: int) -> Enclosure: ...

    @abc.abstractmethod
    def positive(self, g) -> Verdict: ...

    @abc.abstractmethod
    def strictly_positive(self, g) -> Verdict: ...

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator): ...

    def encode(self, g) -> Any:
        return repr(g)

    def is_identity(self, g) -> bool:
        return self.equal(g, self.identity)

    def conj(self, h, g):
        """``h g h^-1``."""
        return self.mul(self.mul(h, g), self.inv(h))

    def power(self, g, n: int):
        if n < 0:
            return self.power(self.inv(g), -n)
        result, base = self.identity, g
        while n:
            if n & 1:
                result = self.mul(result, base)
            n >>= 1
            if n:
                base = self.mul(base, base)
        return result


# -- seeded randomness ------------------------------------------------------

def rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-index generators spawned from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(c) for c in children]


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ORDCOVER_THREADS", "1")))
    except ValueError:
        return 1


def indexed_map(fn: Callable, items: Sequence) -> list:
    """Map preserving index order regardless of completion order."""
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- operations -------------------------------------------------------------

COARSE_PRECISION = 1 << 12


def coboundary_enclosure(oracle: GroupOracle, g, h, precision: int) -> Enclosure:
    """Enclosure of ``f(gh) - f(g) - f(h)``."""
    return (oracle.qm_enclosure(oracle.mul(g, h), precision)
            - oracle.qm_enclosure(g, precision)
            - oracle.qm_enclosure(h, precision))


def coboundary_terms(oracle: GroupOracle, samples: Sequence[tuple], precision: int) -> list[Enclosure]:
    """Enclosures of ``|f(gh) - f(g) - f(h)|`` per pair, tight where it matters.

    Pairs that cannot hold the sampled maximum keep a coarse enclosure.
    """
    if not samples:
        raise ValueError("need at least one sample pair")
    if precision < 1:
        raise ValueError("precision must be >= 1")

    def term(gh, n):
        return abs(coboundary_enclosure(oracle, gh[0], gh[1], n))

    # Coarse pass first; only pairs that could still hold the maximum are
    # recomputed at full precision.  Every term encloses its true value, so
    # mixing precisions keeps the max enclosure sound.
    coarse = min(precision, COARSE_PRECISION)
    terms = indexed_map(lambda gh: term(gh, coarse), samples)
    if coarse < precision:
        best = max(t.lo for t in terms)
        idx = [i for i, t in enumerate(terms) if t.hi >= best]
        for i, t in zip(idx, indexed_map(lambda i: term(samples[i], precision), idx)):
            terms[i] = t
    return terms


def defect_estimate(oracle: GroupOracle, samples: Sequence[tuple], precision: int) -> Enclosure:
    """Enclosure of ``max |f(gh) - f(g) - f(h)|`` over the sampled pairs.

    This bounds the sampled maximum only; it is a lower bound for the true
    defect, never an upper one.
    """
    terms = coboundary_terms(oracle, samples, precision)
    return Enclosure(max(t.lo for t in terms), max(t.hi for t in terms))


def homogeneity_check(oracle: GroupOracle, g, n_max: int, precision: int) -> Verdict:
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    base = oracle.qm_enclosure(g, precision)
    power = oracle.identity
    for n in range(1, n_max + 1):
        power = oracle.mul(power, g)
        enc = oracle.qm_enclosure(power, precision)
        if not enc.overlaps(n * base):
            return Verdict.no({"n": n, "f(g^n)": enc, "n*f(g)": n * base})
    return Verdict.yes({"n_max": n_max})


def conjugation_invariance_check(oracle: GroupOracle, g, h, precision: int) -> Verdict:
    a = oracle.qm_enclosure(oracle.conj(h, g), precision)
    b = oracle.qm_enclosure(g, precision)
    return Verdict.from_bool(a.overlaps(b), {"f(hgh^-1)": a, "f(g)": b})


def naive_positive_member(oracle: GroupOracle, g, defect_bound: Real, precision: int) -> Verdict:
    """Membership in ``{f > D} u {e}``, with ``D`` the configured defect bound."""
    if oracle.is_identity(g):
        return Verdict.yes("identity")
    enc = oracle.qm_enclosure(g, precision)
    if enc.above(defect_bound):
        return Verdict.yes(enc)
    if enc.hi <= _as_fraction(defect_bound):
        return Verdict.no(enc)
    return Verdict.unknown(enc)


def maximal_member(oracle: GroupOracle, g) -> Verdict:
    # on both concrete groups the maximal semigroup is the geometric one
    return oracle.positive(g)


def dominant_member(oracle: GroupOracle, g, precision: int) -> Verdict:
    geo = oracle.strictly_positive(g)
    enc = oracle.qm_enclosure(g, precision)
    if geo.is_yes:
        if enc.hi <= 0:
            raise CertificateConflict(f"strictly positive element with f-enclosure {enc}")
        return Verdict.yes({"geometric": geo.certificate, "enclosure": enc})
    if geo.is_no:
        if enc.lo > 0:
            raise CertificateConflict(f"non-dominant element with f-enclosure {enc}")
        return Verdict.no({"geometric": geo.certificate, "enclosure": enc})
    if enc.lo > 0:
        return Verdict.yes({"enclosure": enc})
    if enc.hi <= 0:
        return Verdict.no({"enclosure": enc})
    return Verdict.unknown({"enclosure": enc})


def falsify_maximal_formula(oracle: GroupOracle, g, trial_elements: Iterable, precision: int = 1 << 12):
    """First trial ``h`` with certified ``f(gh) < f(h)``, else ``None``."""
    for h in trial_elements:
        if oracle.qm_enclosure(oracle.mul(g, h), precision).hi < oracle.qm_enclosure(h, precision).lo:
            return h
    return None


# -- reports ----------------------------------------------------------------

def jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    if isinstance(obj, Enclosure):
        return {"lo": jsonable(obj.lo), "hi": jsonable(obj.hi)}
    if isinstance(obj, Verdict):
        return {"state": obj.state.value, "certificate": jsonable(obj.certificate)}
    if isinstance(obj, State):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if hasattr(obj, "to_json_obj"):
        return obj.to_json_obj()
    return repr(obj)


@dataclass
class AssertionResult:
    name: str
    status: str = "pass"
    checked: int = 0
    unknown: int = 0
    failed: int = 0
    counterexample: Any = None

    def to_dict(self):
        d = {"name": self.name, "status": self.status, "checked": self.checked,
             "unknown": self.unknown, "failed": self.failed}
        if self.counterexample is not None:
            d["counterexample"] = jsonable(self.counterexample)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["status"], d.get("checked", 0), d.get("unknown", 0),
                   d.get("failed", 0), d.get("counterexample"))


@dataclass
class Report:
    suite: str
    seed: int
    sample_count: int
    precision: int
    assertions: list[AssertionResult] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[AssertionResult]:
        return [a for a in self.assertions if a.status != "pass"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def assertion(self, name: str) -> AssertionResult:
        for a in self.assertions:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self):
        return {"suite": self.suite, "seed": self.seed, "sample_count": self.sample_count,
                "precision": self.precision, "assertions": [a.to_dict() for a in self.assertions],
                "metrics": jsonable(self.metrics)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["suite"], d["seed"], d["sample_count"], d["precision"],
                   [AssertionResult.from_dict(a) for a in d["assertions"]], d.get("metrics", {}))

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def summary_lines(self) -> list[str]:
        return [f"{a.status.upper():7s} {a.name} (checked={a.checked}, unknown={a.unknown}, failed={a.failed})"
                for a in self.assertions]


class Tally:
    """Accumulates pass/fail/unknown outcomes per named assertion."""

    def __init__(self, unknown_ceiling: float = DEFAULT_UNKNOWN_CEILING):
        self.unknown_ceiling = unknown_ceiling
        self._results: dict[str, AssertionResult] = {}

    def declare(self, *names: str):
        for name in names:
            self._results.setdefault(name, AssertionResult(name))

    def record(self, name: str, outcome: bool | None, counterexample=None):
        """``outcome`` is True (pass), False (fail) or None (undecided)."""
        r = self._results.setdefault(name, AssertionResult(name))
        r.checked += 1
        if outcome is None:
            r.unknown += 1
        elif not outcome:
            r.failed += 1
            if r.counterexample is None:
                r.counterexample = jsonable(counterexample)

    def implication(self, name: str, premise: Verdict, conclusion: Verdict | None, counterexample=None):
        """Record ``premise => conclusion``; vacuous unless the premise is Yes."""
        if not premise.is_yes:
            return
        if conclusion is None or conclusion.is_unknown:
            self.record(name, None)
        else:
            self.record(name, conclusion.is_yes, counterexample)

    def results(self) -> list[AssertionResult]:
        out = []
        for r in self._results.values():
            if r.failed:
                r.status = "fail"
            elif r.checked and r.unknown / r.checked > self.unknown_ceiling:
                r.status = "unknown"
            else:
                r.status = "pass"
            out.append(r)
        return out


# -- the group-agnostic suite -------------------------------------------------

def axioms_suite(oracle: GroupOracle, sample_count: int, seed: int, precision: int,
                 defect_bound: Real = DEFAULT_DEFECT_BOUND,
                 unknown_ceiling: float = DEFAULT_UNKNOWN_CEILING,
                 samples: Sequence | None = None) -> Report:
    """Order-semigroup axioms, dominant-set conditions D1-D3 and the
    quasimorphism sanity checks over a seeded sample.

    Every premise is itself a certified verdict; only Yes premises count.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if samples is None:
        samples = [oracle.sample(r) for r in rng_streams(seed, sample_count)]
    samples = list(samples)
    n = len(samples)
    sandwich = SandwichConstants.from_defect_bound(defect_bound)
    tally = Tally(unknown_ceiling)
    tally.declare("closure", "pointedness", "conjugation_stability", "multiplicativity",
                  "D1_semigroup", "D1_conjugation", "D2_positive_on_dominants", "D3_sandwich",
                  "naive_implies_maximal", "dominant_implies_maximal", "maximal_and_f_positive_implies_dominant",
                  "no_falsifier_for_maximal", "homogeneity", "conjugation_invariance", "numeric_stability")

    enc = indexed_map(lambda g: oracle.qm_enclosure(g, precision), samples)
    pos = indexed_map(oracle.positive, samples)
    spos = indexed_map(oracle.strictly_positive, samples)
    dom = indexed_map(lambda g: dominant_member(oracle, g, precision), samples)
    E = oracle.encode
    boundary: Counter = Counter()

    def interior(*idx):
        return all(spos[j % n].is_yes for j in idx)

    def implication(name, conclusion, premises_interior, cex):
        # a computed product of a boundary element lies within rounding of the
        # boundary, so an undecided conclusion there says nothing about the axiom
        if conclusion.is_unknown and not premises_interior:
            boundary[name] += 1
        else:
            tally.implication(name, Verdict.yes(), conclusion, cex)

    def check(i):
        g, h, k = samples[i], samples[(i + 1) % n], samples[(i + 2) % n]
        gh = oracle.mul(g, h)
        if pos[i].is_yes and pos[(i + 1) % n].is_yes:
            implication("closure", oracle.positive(gh), interior(i, i + 1), {"g": E(g), "h": E(h)})
        if not oracle.is_identity(g) and pos[i].is_yes:
            inv_pos = oracle.positive(oracle.inv(g))
            tally.record("pointedness", None if inv_pos.is_unknown else inv_pos.is_no, {"g": E(g)})
        if pos[i].is_yes:
            implication("conjugation_stability", oracle.positive(oracle.conj(k, g)), interior(i),
                        {"g": E(g), "conjugator": E(k)})
        # g1 = p g2, h1 = q h2 with p, q positive; the premises are re-certified
        if pos[i].is_yes and pos[(i + 1) % n].is_yes:
            p, q = g, h
            g2, h2 = k, samples[(i + 3) % n]
            g1, h1 = oracle.mul(p, g2), oracle.mul(q, h2)
            prem = [oracle.positive(oracle.mul(g1, oracle.inv(g2))), oracle.positive(oracle.mul(h1, oracle.inv(h2)))]
            if all(v.is_yes for v in prem):
                concl = oracle.positive(oracle.mul(oracle.mul(g1, h1), oracle.inv(oracle.mul(g2, h2))))
                implication("multiplicativity", concl, interior(i, i + 1),
                            {"g1": E(g1), "g2": E(g2), "h1": E(h1), "h2": E(h2)})
            elif any(v.is_unknown for v in prem):
                implication("multiplicativity", Verdict.unknown(), interior(i, i + 1), None)
        # dominant set: D1-D3
        if dom[i].is_yes and dom[(i + 1) % n].is_yes:
            tally.implication("D1_semigroup", Verdict.yes(), dominant_member(oracle, gh, precision),
                              {"g": E(g), "h": E(h)})
        if dom[i].is_yes:
            tally.implication("D1_conjugation", Verdict.yes(),
                              dominant_member(oracle, oracle.conj(k, g), precision), {"g": E(g), "conjugator": E(k)})
            f_pos = Verdict.yes() if enc[i].lo > 0 else (Verdict.no() if enc[i].hi <= 0 else Verdict.unknown())
            tally.implication("D2_positive_on_dominants", Verdict.yes(), f_pos, {"g": E(g), "f": enc[i]})
        if enc[i].lo >= sandwich.C1:
            tally.implication("D3_sandwich", Verdict.yes(), dom[i], {"g": E(g), "f": enc[i], "C1": sandwich.C1})
        # relations between the membership tests
        naive = naive_positive_member(oracle, g, defect_bound, precision)
        tally.implication("naive_implies_maximal", naive, pos[i], {"g": E(g)})
        tally.implication("dominant_implies_maximal", dom[i], pos[i], {"g": E(g)})
        if pos[i].is_yes and enc[i].lo > 0:
            tally.implication("maximal_and_f_positive_implies_dominant", Verdict.yes(), spos[i], {"g": E(g)})
        if pos[i].is_yes:
            trials = [oracle.identity, h, k, oracle.inv(h)]
            witness = falsify_maximal_formula(oracle, g, trials, precision)
            tally.record("no_falsifier_for_maximal", witness is None,
                         {"g": E(g), "h": None if witness is None else E(witness)})
        hom = homogeneity_check(oracle, g, 3, precision)
        tally.record("homogeneity", hom.is_yes, {"g": E(g), "detail": hom.certificate})
        ci = conjugation_invariance_check(oracle, g, k, precision)
        tally.record("conjugation_invariance", ci.is_yes, {"g": E(g), "h": E(k), "detail": ci.certificate})

    for i in range(n):
        try:
            check(i)
        except ArithmeticError as exc:
            # float-backed groups can lose a winding on ill-conditioned products
            tally.record("numeric_stability", None, {"g": E(samples[i]), "error": str(exc)})
        else:
            tally.record("numeric_stability", True)
    return Report("axioms", seed, sample_count, precision, tally.results(),
                  {"boundary_undecidable": dict(sorted(boundary.items()))})
