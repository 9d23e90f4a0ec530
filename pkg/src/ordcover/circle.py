"""Rational piecewise-linear lifts of circle homeomorphisms.

A :class:`PLLift` is a strictly increasing map ``f: R -> R`` with
``f(x + 1) = f(x) + 1`` that is linear between consecutive breakpoints of
``[0, 1)``.  All group operations and order decisions are exact; the
translation number is only ever enclosed.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _orbit
from .qm_core import Enclosure, GroupOracle, Verdict, jsonable

EXACT_ITERATION_LIMIT = 256
RATIONAL_PERIOD_LIMIT = 64
LOOSE_GAP = Fraction(1, 1 << 10)
_U = 2.0 ** -53


class InvariantError(ValueError):
    """Input data does not describe a valid element."""


class PreconditionError(ValueError):
    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


@dataclass(frozen=True)
class PLLift:
    """Canonical rational PL lift.

    ``breakpoints[0] == 0`` always; ``values[i] = f(breakpoints[i])``.  On the
    last segment the map runs linearly from ``values[-1]`` to
    ``values[0] + 1``.  Breakpoints where the slope does not change are
    removed, so equal maps have identical fields.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        xs = tuple(_frac(x) for x in self.breakpoints)
        vs = tuple(_frac(v) for v in self.values)
        if not xs:
            raise InvariantError("a PL lift needs at least one breakpoint")
        if len(xs) != len(vs):
            raise InvariantError("breakpoints and values differ in length")
        if xs[0] != 0:
            raise InvariantError("first breakpoint must be 0")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise InvariantError("breakpoints must be strictly increasing")
        if xs[-1] >= 1:
            raise InvariantError("breakpoints must lie in [0, 1)")
        for a, b in zip(vs, vs[1:]):
            if not a < b:
                raise InvariantError("values must be strictly increasing")
        if not vs[-1] < vs[0] + 1:
            raise InvariantError("last value must be below values[0] + 1")
        xs, vs = _prune(xs, vs)
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "values", vs)

    # -- constructors --------------------------------------------------------

    @classmethod
    def identity(cls) -> "PLLift":
        return cls((Fraction(0),), (Fraction(0),))

    @classmethod
    def translation(cls, y) -> "PLLift":
        return cls((Fraction(0),), (_frac(y),))

    @classmethod
    def from_function(cls, fn, candidates: Iterable[Fraction]) -> "PLLift":
        """Build from an exact evaluator and a superset of its breakpoints."""
        pts = sorted({x - _floor(x) for x in candidates} | {Fraction(0)})
        return cls(tuple(pts), tuple(fn(x) for x in pts))

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)

    def _segment(self, i):
        """Endpoints ``(x0, v0, x1, v1)`` of segment ``i``."""
        xs, vs = self.breakpoints, self.values
        if i + 1 < len(xs):
            return xs[i], vs[i], xs[i + 1], vs[i + 1]
        return xs[i], vs[i], Fraction(1), vs[0] + 1

    def slopes(self) -> list[Fraction]:
        out = []
        for i in range(len(self.breakpoints)):
            x0, v0, x1, v1 = self._segment(i)
            out.append((v1 - v0) / (x1 - x0))
        return out

    def deltas(self) -> list[Fraction]:
        """``f(x_i) - x_i`` at the breakpoints."""
        return [v - x for x, v in zip(self.breakpoints, self.values)]

    @property
    def is_translation(self) -> bool:
        return len(self.breakpoints) == 1

    def to_json_obj(self):
        return {"type": "pl", "breakpoints": [jsonable(x) for x in self.breakpoints],
                "values": [jsonable(v) for v in self.values]}

    def __str__(self):
        pts = ", ".join(f"({x}, {v})" for x, v in zip(self.breakpoints, self.values))
        return f"PLLift[{pts}]"


def _prune(xs, vs):
    k = len(xs)
    if k == 1:
        return xs, vs
    ext_x = list(xs) + [Fraction(1)]
    ext_v = list(vs) + [vs[0] + 1]
    slopes = [(ext_v[i + 1] - ext_v[i]) / (ext_x[i + 1] - ext_x[i]) for i in range(k)]
    keep = [0] + [i for i in range(1, k) if slopes[i] != slopes[i - 1]]
    return tuple(xs[i] for i in keep), tuple(vs[i] for i in keep)


# -- group operations -----------------------------------------------------------

def evaluate(f: PLLift, x) -> Fraction:
    x = _frac(x)
    n = _floor(x)
    r = x - n
    i = bisect.bisect_right(f.breakpoints, r) - 1
    x0, v0, x1, v1 = f._segment(i)
    return v0 + (v1 - v0) * (r - x0) / (x1 - x0) + n


def evaluate_inverse(f: PLLift, y) -> Fraction:
    """The unique ``x`` with ``f(x) = y``."""
    y = _frac(y)
    n = _floor(y - f.values[0])
    r = y - n
    # r in [values[0], values[0] + 1)
    i = bisect.bisect_right(f.values, r) - 1
    x0, v0, x1, v1 = f._segment(i)
    return x0 + (x1 - x0) * (r - v0) / (v1 - v0) + n


def compose(f: PLLift, g: PLLift) -> PLLift:
    """``f o g``: apply ``g`` first."""
    cands = list(g.breakpoints) + [evaluate_inverse(g, x) for x in f.breakpoints]
    return PLLift.from_function(lambda t: evaluate(f, evaluate(g, t)), cands)


def invert(f: PLLift) -> PLLift:
    return PLLift.from_function(lambda y: evaluate_inverse(f, y), f.values)


def conjugate(h: PLLift, g: PLLift) -> PLLift:
    """``h g h^-1``."""
    return compose(compose(h, g), invert(h))


def power(f: PLLift, n: int) -> PLLift:
    if n < 0:
        return power(invert(f), -n)
    out = PLLift.identity()
    for _ in range(n):
        out = compose(f, out)
    return out


# -- translation number ------------------------------------------------------

def _float_data(f: PLLift):
    xs = [float(x) for x in f.breakpoints]
    vs = [float(v) for v in f.values]
    ss = [float(s) for s in f.slopes()]
    scale = 2.0 + max(abs(v) for v in vs) + 1.0 + max(abs(s) for s in ss)
    return xs, vs, ss, 64 * _U * scale


def orbit_enclosures(f: PLLift, ns: Sequence[int]):
    """Certified bounds ``lo <= f^n(0) <= hi`` (exact rationals) for each n.

    Returns ``(bounds, exact_T)`` where ``exact_T`` is the translation number
    when a periodic trapping interval was found, otherwise ``None``.
    """
    xs, vs, ss, eps = _float_data(f)
    raw, period, jump = _orbit.run_orbit(_orbit.KIND_PL, xs, vs, ss, 0, eps, ns)
    bounds = {n: (Fraction(lo[0]) + Fraction(lo[1]), Fraction(hi[0]) + Fraction(hi[1]))
              for n, (lo, hi) in raw.items()}
    return bounds, (Fraction(jump, period) if period else None)


def exact_rational_translation(f: PLLift, lo: Fraction, hi: Fraction, max_period: int = RATIONAL_PERIOD_LIMIT):
    """``m/p`` in ``[lo, hi]`` with ``p <= max_period`` and ``f^p - m`` having a
    fixed point (so ``T(f) = m/p`` exactly), or ``None``."""
    fp = PLLift.identity()
    for p in range(1, max_period + 1):
        fp = compose(f, fp)
        for m in range(math.ceil(lo * p), math.floor(hi * p) + 1):
            if has_fixed_point(compose(PLLift.translation(-m), fp)).is_yes:
                return Fraction(m, p)
    return None


def _rational_fallback(f: PLLift, ns, bounds, exact_T):
    """Replace loose chain bounds by ``T +- 1/n`` when ``T`` is certified rational.

    Loose chains come from semi-stable periodic orbits, which force a rational
    translation number with a short period.
    """
    if exact_T is not None or not bounds:
        return None
    n = max(bounds)
    lo, hi = bounds[n]
    if hi - lo <= LOOSE_GAP:
        return None
    return exact_rational_translation(f, (lo - 1) / n, (hi + 1) / n)


def translation_number_enclosure(f: PLLift, n: int) -> Enclosure:
    """``[(f^n(0) - 1)/n, (f^n(0) + 1)/n]``, which contains ``T(f)``.

    Translations and ``n <= EXACT_ITERATION_LIMIT`` use exact point iteration
    (width exactly ``2/n``).  Longer orbits use outward-rounded chains, which
    widen the interval by the chain gap divided by ``n``.  When the chains come
    out loose and ``T`` is certified equal to some ``m/p`` the result is
    ``[T - 1/n, T + 1/n]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if f.is_translation:
        x = n * f.values[0]
        return Enclosure((x - 1) / n, (x + 1) / n)
    if n <= EXACT_ITERATION_LIMIT:
        x = Fraction(0)
        for _ in range(n):
            x = evaluate(f, x)
        return Enclosure((x - 1) / n, (x + 1) / n)
    return translation_number_enclosures(f, [n])[n]


def translation_number_enclosures(f: PLLift, ns: Sequence[int]) -> dict[int, Enclosure]:
    """Enclosures at several precisions from a single orbit pass."""
    if f.is_translation:
        return {n: translation_number_enclosure(f, n) for n in ns}
    out = {}
    small = sorted(n for n in ns if n <= EXACT_ITERATION_LIMIT)
    x, done = Fraction(0), 0
    for n in small:
        if n < 1:
            raise ValueError("n must be >= 1")
        for _ in range(n - done):
            x = evaluate(f, x)
        done = n
        out[n] = Enclosure((x - 1) / n, (x + 1) / n)
    big = [n for n in ns if n > EXACT_ITERATION_LIMIT]
    if big:
        bounds, exact_T = orbit_enclosures(f, big)
        T = _rational_fallback(f, big, bounds, exact_T)
        for n, (lo, hi) in bounds.items():
            out[n] = (Enclosure(T - Fraction(1, n), T + Fraction(1, n)) if T is not None
                      else Enclosure((lo - 1) / n, (hi + 1) / n))
    return out


# -- order decisions -----------------------------------------------------------

def min_delta(f: PLLift) -> Fraction:
    return min(f.deltas())


def max_delta(f: PLLift) -> Fraction:
    return max(f.deltas())


def geometric_positive(f: PLLift, strict: bool = False) -> Verdict:
    # f(x) - x is PL and periodic, so its extrema sit at breakpoints
    i, m = min(enumerate(f.deltas()), key=lambda p: p[1])
    ok = m > 0 if strict else m >= 0
    return Verdict.from_bool(ok, {"min_delta": m, "at": f.breakpoints[i]})


def has_fixed_point(f: PLLift) -> Verdict:
    lo, hi = min_delta(f), max_delta(f)
    return Verdict.from_bool(lo <= 0 <= hi, {"min_delta": lo, "max_delta": hi})


def witness_nonmaximal(g: PLLift, epsilon) -> tuple[PLLift, PLLift]:
    """Return ``(h, gh)`` with ``h = g^-1 tau_eps g``.

    ``h`` is strictly positive (a conjugate of a positive translation) while
    ``gh = tau_eps g`` still moves the worst point of ``g`` backwards, so
    ``g`` does not map strictly positive elements to strictly positive ones.
    """
    epsilon = _frac(epsilon)
    delta = -min_delta(g)
    if delta <= 0:
        raise PreconditionError(f"g is positive (min displacement {-delta})", delta=delta)
    if not 0 < epsilon < delta:
        raise PreconditionError(f"need 0 < epsilon < {delta}", delta=delta)
    h = compose(invert(g), compose(PLLift.translation(epsilon), g))
    gh = compose(g, h)
    return h, gh


# -- sampling ------------------------------------------------------------------

def _random_fractions(rng: np.random.Generator, count: int, denominator_bound: int) -> list[Fraction]:
    """``count`` distinct rationals in (0, 1), sorted."""
    out: set[Fraction] = set()
    while len(out) < count:
        q = int(rng.integers(2, denominator_bound + 1))
        out.add(Fraction(int(rng.integers(1, q)), q))
    return sorted(out)


def random_pl(seed, k: int = 3, denominator_bound: int = 16, shift_range: int = 1) -> PLLift:
    """Seeded random lift with ``k`` breakpoints before canonical pruning.

    ``seed`` may be an int or a ``numpy.random.Generator``.  ``f(0)`` is drawn
    from ``[-shift_range, shift_range]``; interior values are spread through
    ``(f(0), f(0) + 1)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q = int(rng.integers(1, denominator_bound + 1))
    v0 = Fraction(int(rng.integers(-shift_range * q, shift_range * q + 1)), q)
    xs = [Fraction(0)] + (_random_fractions(rng, k - 1, denominator_bound) if k > 1 else [])
    vs = [v0] + ([v0 + t for t in _random_fractions(rng, k - 1, denominator_bound)] if k > 1 else [])
    return PLLift(tuple(xs), tuple(vs))


# -- serialization ---------------------------------------------------------

def to_json(f: PLLift) -> str:
    return json.dumps(f.to_json_obj())


def from_json_obj(obj) -> PLLift:
    if not isinstance(obj, dict) or obj.get("type") != "pl":
        raise InvariantError("not a PL lift object")
    try:
        xs = [Fraction(s) for s in obj["breakpoints"]]
        vs = [Fraction(s) for s in obj["values"]]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvariantError(f"malformed PL lift: {exc}") from exc
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    return PLLift(tuple(xs[i] for i in order), tuple(vs[i] for i in order))


def from_json(text: str) -> PLLift:
    return from_json_obj(json.loads(text))


# -- oracle --------------------------------------------------------------------

class CircleOracle(GroupOracle):
    """The group of PL lifts with the translation number."""

    name = "circle"

    def __init__(self, k_range=(1, 4), denominator_bound: int = 16, shift_range: int = 2):
        self.identity = PLLift.identity()
        self.k_range = k_range
        self.denominator_bound = denominator_bound
        self.shift_range = shift_range

    def mul(self, g, h):
        return compose(g, h)

    def inv(self, g):
        return invert(g)

    def equal(self, g, h):
        return g == h

    def qm_enclosure(self, g, n):
        return translation_number_enclosure(g, n)

    def positive(self, g):
        return geometric_positive(g, strict=False)

    def strictly_positive(self, g):
        return geometric_positive(g, strict=True)

    def sample(self, rng):
        k = int(rng.integers(self.k_range[0], self.k_range[1] + 1))
        return random_pl(rng, k, self.denominator_bound, self.shift_range)

    def encode(self, g):
        return g.to_json_obj()
