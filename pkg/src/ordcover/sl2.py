"""The universal cover of PSL(2, R) acting on the line.

``RP^1`` is parametrized by ``x -> direction (cos pi x, sin pi x)``, so the
boundary circle has period 1 in ``x`` and the central generator ``z`` acts as
``x -> x + 1``.  A :class:`CoverElement` is a projective matrix together with
an integer winding; its lift is ``F(x) = canonical_lift(mat, x) + winding``
where the canonical lift takes a value in ``[0, 1)`` at ``x = 0``.

Arithmetic is floating point.  Order predicates are certified against an
explicit per-evaluation error model and return ``UNKNOWN`` when the budget
runs out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _orbit
from .qm_core import CertificateConflict, Enclosure, GroupOracle, Verdict

DET_TOL = 1e-12
PARSE_DET_TOL = 1e-6
CONE_TOL = 1e-10
EVAL_ERROR = 1e-12
DEFAULT_BUDGET = 1 << 16
GW_BOUND = 2
PRODUCT_NORM_CAP = 400.0


class NumericInstabilityError(ArithmeticError):
    """A winding correction could not be rounded unambiguously."""


class InvariantError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectiveMatrix:
    """Unimodular 2x2 matrix modulo sign.

    Construction rescales to determinant 1 and flips the sign so that the
    first nonzero entry among ``a, b, c`` is positive.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not det > 0 or not math.isfinite(det):
            raise InvariantError(f"matrix must have positive finite determinant, got {det}")
        # rescale only beyond rounding, so normalizing twice changes nothing
        if abs(det - 1.0) > 4 * 2.0 ** -52 * max(1.0, abs(a * d) + abs(b * c)):
            s = math.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        if a < 0 or (a == 0 and (b < 0 or (b == 0 and c < 0))):
            a, b, c, d = -a, -b, -c, -d
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v)
        # cancellation in ad - bc costs about u * (|ad| + |bc|)
        if abs(a * d - b * c - 1) > DET_TOL * max(1.0, abs(a * d) + abs(b * c)):
            raise InvariantError("determinant drifted after normalization")

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    def entries(self):
        return self.a, self.b, self.c, self.d

    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "ProjectiveMatrix") -> "ProjectiveMatrix":
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        p, q, r, t = a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h
        if not p * t - q * r > 0:
            raise NumericInstabilityError("product too ill-conditioned to keep a positive determinant")
        return ProjectiveMatrix(p, q, r, t)

    def inverse(self) -> "ProjectiveMatrix":
        return ProjectiveMatrix(self.d, -self.b, -self.c, self.a)

    def sq_norm(self) -> float:
        return self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2


def _base_angle(a: float, c: float) -> float:
    """Canonical lift at 0: direction angle of the first column over pi, in [0, 1)."""
    t = math.atan2(c, a) / math.pi
    t -= math.floor(t)
    return 0.0 if t >= 1.0 else t


def _lift_frac(a, b, c, d, base, r):
    # The sweep angle from the first column fixes the branch; the direct angle
    # of M u(r) is better conditioned, so it supplies the digits.
    s, co = math.sin(math.pi * r), math.cos(math.pi * r)
    sweep = math.atan2(s, (a * a + c * c) * co + (a * b + c * d) * s) / math.pi
    diff = math.atan2(c * co + d * s, a * co + b * s) / math.pi - base - sweep
    return base + sweep + (diff - round(diff))


def canonical_lift(m: ProjectiveMatrix, x: float) -> float:
    """Continuous lift of the projective action with value in [0, 1) at 0."""
    n = math.floor(x)
    return _lift_frac(*m.entries(), _base_angle(m.a, m.c), x - n) + n


def canonical_lift_array(m: ProjectiveMatrix, x: np.ndarray) -> np.ndarray:
    a, b, c, d = m.entries()
    n = np.floor(x)
    r = x - n
    s, co = np.sin(np.pi * r), np.cos(np.pi * r)
    base = _base_angle(a, c)
    sweep = np.arctan2(s, (a * a + c * c) * co + (a * b + c * d) * s) / np.pi
    diff = np.arctan2(c * co + d * s, a * co + b * s) / np.pi - base - sweep
    return base + sweep + (diff - np.round(diff)) + n


@dataclass(frozen=True)
class CoverElement:
    mat: ProjectiveMatrix
    winding: int = 0

    def __post_init__(self):
        if int(self.winding) != self.winding:
            raise InvariantError("winding must be an integer")
        object.__setattr__(self, "winding", int(self.winding))

    def __call__(self, x: float) -> float:
        return canonical_lift(self.mat, x) + self.winding

    def lift_array(self, x: np.ndarray) -> np.ndarray:
        return canonical_lift_array(self.mat, x) + self.winding

    @classmethod
    def identity(cls):
        return cls(ProjectiveMatrix.identity(), 0)

    def to_json_obj(self):
        return {"type": "sl2cover", "mat": list(self.mat.entries()), "winding": self.winding}

    def __str__(self):
        a, b, c, d = self.mat.entries()
        return f"Cover([[{a:.6g}, {b:.6g}], [{c:.6g}, {d:.6g}]], w={self.winding})"


def boundary_lift_eval(g: CoverElement, x: float) -> float:
    return g(x)


def central(k: int = 1) -> CoverElement:
    """``z^k``: acts by ``x -> x + k``."""
    return CoverElement(ProjectiveMatrix.identity(), k)


def rotation(theta: float, winding: int = 0) -> CoverElement:
    c, s = math.cos(theta), math.sin(theta)
    return CoverElement(ProjectiveMatrix(c, -s, s, c), winding)


def _round_winding(value: float) -> int:
    w = round(value)
    if abs(value - w) > 0.25:
        raise NumericInstabilityError(f"winding correction {value!r} is not near an integer")
    return int(w)


def mul(g: CoverElement, h: CoverElement) -> CoverElement:
    """Group law: the lift of the product is ``F_g o F_h``."""
    m = g.mat @ h.mat
    target = g(h(0.0))
    return CoverElement(m, _round_winding(target - canonical_lift(m, 0.0)))


def inv(g: CoverElement) -> CoverElement:
    m = g.mat.inverse()
    return CoverElement(m, _round_winding(-canonical_lift(m, g(0.0))))


def conj(h: CoverElement, g: CoverElement) -> CoverElement:
    return mul(mul(h, g), inv(h))


def power(g: CoverElement, n: int) -> CoverElement:
    if n < 0:
        return power(inv(g), -n)
    out = CoverElement.identity()
    for _ in range(n):
        out = mul(out, g)
    return out


_EQUALITY_POINTS = (0.0, 1.0 / 3.0, 2.0 / 3.0)


def cover_equal(g: CoverElement, h: CoverElement, tol: float = 1e-9) -> bool:
    """Lifts agree at three points, which pins both the projective map and the
    winding.

    Comparing (matrix, winding) entrywise would be discontinuous: a matrix
    within rounding of the identity can store winding -1 with its canonical
    lift just below 1 at 0.
    """
    return all(abs(g(x) - h(x)) <= tol for x in _EQUALITY_POINTS)


# -- Lie algebra ---------------------------------------------------------------

@dataclass(frozen=True)
class LieAlgebraElement:
    """Traceless matrix ``[[a, b], [c, -a]]``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for v in (self.a, self.b, self.c):
            if not math.isfinite(v):
                raise InvariantError("Lie algebra entries must be finite")

    @property
    def discriminant(self) -> float:
        """``a^2 + bc``; negative for elliptic, zero for nilpotent."""
        return self.a * self.a + self.b * self.c

    def norm(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c))

    def scaled(self, t: float) -> "LieAlgebraElement":
        return LieAlgebraElement(self.a * t, self.b * t, self.c * t)


@dataclass(frozen=True)
class BoundaryVectorField:
    """Infinitesimal boundary motion of ``exp(tX)`` in ``x`` units:
    ``E(x) = [(c-b)/2 + (c+b)/2 cos 2 pi x - a sin 2 pi x] / pi``.
    """

    constant: float
    cos_coeff: float
    sin_coeff: float

    @classmethod
    def of(cls, X: LieAlgebraElement) -> "BoundaryVectorField":
        return cls((X.c - X.b) / 2, (X.c + X.b) / 2, -X.a)

    def __call__(self, x):
        return (self.constant + self.cos_coeff * np.cos(2 * np.pi * x)
                + self.sin_coeff * np.sin(2 * np.pi * x)) / np.pi

    @property
    def minimum(self) -> float:
        return (self.constant - math.hypot(self.cos_coeff, self.sin_coeff)) / math.pi

    @property
    def max_speed(self) -> float:
        return (abs(self.constant) + math.hypot(self.cos_coeff, self.sin_coeff)) / math.pi


def exp_matrix(X: LieAlgebraElement, t: float = 1.0) -> ProjectiveMatrix:
    a, b, c = X.a * t, X.b * t, X.c * t
    disc = a * a + b * c
    if disc == 0.0:
        ch, sh = 1.0, 1.0
    elif abs(disc) < 1e-8:
        ch, sh = 1.0 + disc / 2 + disc * disc / 24, 1.0 + disc / 6 + disc * disc / 120
    elif disc > 0:
        s = math.sqrt(disc)
        ch, sh = math.cosh(s), math.sinh(s) / s
    else:
        s = math.sqrt(-disc)
        ch, sh = math.cos(s), math.sin(s) / s
    return ProjectiveMatrix(ch + sh * a, sh * b, sh * c, ch - sh * a)


def exp_cover(X: LieAlgebraElement, t: float = 1.0) -> CoverElement:
    """``exp(tX)`` in the cover; the winding follows ``s -> exp(sX)`` from ``s = 0``."""
    speed = BoundaryVectorField.of(X).max_speed
    steps = max(1, math.ceil(speed * abs(t) / 0.25))
    lifted = 0.0
    m = ProjectiveMatrix.identity()
    for k in range(1, steps + 1):
        m = exp_matrix(X, t * k / steps)
        base = canonical_lift(m, 0.0)
        w = round(lifted - base)
        new = base + w
        if abs(new - lifted) >= 0.5:
            raise NumericInstabilityError("boundary moved too far within one subdivision step")
        lifted = new
    return CoverElement(m, int(round(lifted - canonical_lift(m, 0.0))))


def cone_contains(X: LieAlgebraElement, tol: float = CONE_TOL) -> Verdict:
    """Membership in the positive invariant cone ``{c >= b, a^2 + bc <= 0}``.

    Equivalent to ``min_x E(x) >= 0``.  Exact boundary points (checked in
    rational arithmetic on the stored floats) are members; other points
    within ``tol`` of the boundary, relative to ``|X|``, are UNKNOWN.
    """
    a, b, c = Fraction(X.a), Fraction(X.b), Fraction(X.c)
    if c >= b and a * a + b * c <= 0 and (a * a + b * c == 0 or c == b):
        return Verdict.yes({"boundary": True})
    margin = BoundaryVectorField.of(X).minimum * math.pi
    scale = X.norm()
    cert = {"min_E_times_pi": margin}
    if margin > tol * scale:
        return Verdict.yes(cert)
    if margin < -tol * scale:
        return Verdict.no(cert)
    return Verdict.unknown(cert)


# -- certified displacement bounds -----------------------------------------------

@dataclass(frozen=True)
class DisplacementBounds:
    """Certified facts about ``D(x) = F^n(x) - x`` from an ``m``-point grid.

    ``min_lower <= D`` everywhere and ``D <= max_upper`` everywhere;
    ``D(argmin) <= min_at_sample`` and ``D(argmax) >= max_at_sample``.
    """

    m: int
    min_lower: float
    min_at_sample: float
    max_upper: float
    max_at_sample: float
    argmin: float
    argmax: float


def _lipschitz_data(m: ProjectiveMatrix):
    a, b, c, d = m.entries()
    P = (a * a + b * b + c * c + d * d) / 2
    R = math.hypot((a * a + c * c - b * b - d * d) / 2, a * b + c * d)
    top = P + R                       # sigma_max^2 >= 1
    L = top - 1 + 1e-15 * top         # |D'| <= max(F') - 1
    M2 = 2 * math.pi * R * top * top  # |D''| = |q'| / q^2
    return L, M2, top


def evaluation_error(m: ProjectiveMatrix) -> float:
    """Bound on the error of one floating evaluation of the lift.

    The image vector ``M u`` carries absolute error about ``u |M|`` and has
    length at least ``1 / |M|``, so its angle is good to about ``u |M|^2``.
    """
    top = _lipschitz_data(m)[2]
    return max(EVAL_ERROR, 64 * 2.0 ** -53 * (1 + top))


def displacement_bounds(g: CoverElement, m: int, n: int = 1) -> DisplacementBounds:
    eps = evaluation_error(g.mat)
    h = 1.0 / m
    x = np.arange(m) * h
    # outward-rounded chains enclose F^n on the grid because F is increasing
    lo, hi = x, x
    for _ in range(n):
        lo = g.lift_array(lo) - eps
        hi = g.lift_array(hi) + eps
    dlo, dhi = lo - x, hi - x
    # monotonicity alone: F^n(x) - x >= F^n(x_i) - x_{i+1} on each cell
    cell_lo = dlo - h
    cell_hi = np.roll(dhi, -1) + h
    if n == 1:
        L, M2, _ = _lipschitz_data(g.mat)
        D = (lo + hi) / 2 - x
        nxt = np.roll(D, -1)
        smooth_lo = np.maximum(np.minimum(D, nxt) - M2 * h * h / 8, (D + nxt) / 2 - L * h / 2) - eps
        smooth_hi = np.minimum(np.maximum(D, nxt) + M2 * h * h / 8, (D + nxt) / 2 + L * h / 2) + eps
        cell_lo = np.maximum(cell_lo, smooth_lo)
        cell_hi = np.minimum(cell_hi, smooth_hi)
    i, j = int(np.argmin(dhi)), int(np.argmax(dlo))
    return DisplacementBounds(m, float(cell_lo.min()), float(dhi[i]), float(cell_hi.max()),
                              float(dlo[j]), i / m, j / m)


def _grid_sizes(budget: int):
    m = 64
    while m <= budget:
        yield m
        m *= 2


def _is_projective_identity(m: ProjectiveMatrix) -> bool:
    return m.b == 0 and m.c == 0 and m.a == m.d


def _exact_parabolic(m: ProjectiveMatrix) -> bool:
    a, b, c, d = (Fraction(v) for v in m.entries())
    return (a - d) ** 2 + 4 * b * c == 0 and not _is_projective_identity(m)


def parabolic_data(g: CoverElement):
    """``(n, upward, x_fixed)`` for an exactly parabolic matrix.

    ``n`` is the integer displacement at the fixed direction (the translation
    number) and ``upward`` says whether ``F(x) - x >= n`` or ``<= n``.
    """
    a, b, c, d = g.mat.entries()
    sgn = 1.0 if a + d > 0 else -1.0
    lam = (a + d) / 2
    v = (b, lam - a) if b != 0 else (lam - d, c)
    xf = math.atan2(v[1], v[0]) / math.pi
    xf -= math.floor(xf)
    disp = g(xf) - xf
    n = round(disp)
    if abs(disp - n) > 1e-6:
        raise NumericInstabilityError(f"parabolic fixed direction displaced by {disp}")
    upward = sgn * (c - b) > 0
    return int(n), upward, xf


def _degenerate_positive(g: CoverElement, strict: bool):
    """Exact answer for the projective identity and exact parabolics, else None.

    The answer is the same for every positive power of ``g``.
    """
    if _is_projective_identity(g.mat):
        w = g.winding
        return Verdict.from_bool(w >= 1 if strict else w >= 0, {"central": w})
    if _exact_parabolic(g.mat):
        try:
            n, up, xf = parabolic_data(g)
        except NumericInstabilityError:
            return Verdict.unknown("parabolic fixed direction unresolved")
        ok = n >= 1 if strict else (n >= 1 or (n == 0 and up))
        return Verdict.from_bool(ok, {"parabolic_shift": n, "upward": up, "fixed_at": xf})
    return None


def power_positive(g: CoverElement, n: int, strict: bool = False, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Certified decision of ``F^n(x) >= x`` (or ``>``) for all ``x``.

    ``F^n`` is enclosed by iterating ``F`` on the grid, so no matrix power
    is formed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _degenerate_positive(g, strict)
    if exact is not None:
        return exact
    for m in _grid_sizes(budget):
        bd = displacement_bounds(g, m, n)
        if (bd.min_lower > 0) if strict else (bd.min_lower >= 0):
            return Verdict.yes({"min_lower": bd.min_lower, "grid": m})
        if bd.min_at_sample < 0 or (strict and bd.min_at_sample <= 0):
            return Verdict.no({"witness_x": bd.argmin, "displacement_at_most": bd.min_at_sample, "grid": m})
    return Verdict.unknown({"min_lower": bd.min_lower, "min_at_sample": bd.min_at_sample, "grid": bd.m})


def geometric_positive(g: CoverElement, strict: bool = False, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Certified decision of ``F(x) >= x`` (or ``>``) for all ``x``."""
    return power_positive(g, 1, strict, budget)


def has_fixed_point(g: CoverElement, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Some ``x`` with ``F(x) = x``, by sign change of ``F(x) - x``."""
    if _is_projective_identity(g.mat):
        return Verdict.from_bool(g.winding == 0, {"central": g.winding})
    if _exact_parabolic(g.mat):
        try:
            n, _, xf = parabolic_data(g)
        except NumericInstabilityError:
            return Verdict.unknown("parabolic fixed direction unresolved")
        return Verdict.from_bool(n == 0, {"parabolic_shift": n, "fixed_at": xf})
    for m in _grid_sizes(budget):
        bd = displacement_bounds(g, m)
        if bd.min_at_sample <= 0 <= bd.max_at_sample:
            return Verdict.yes({"below_at": bd.argmin, "above_at": bd.argmax, "grid": m})
        if bd.min_lower > 0 or bd.max_upper < 0:
            return Verdict.no({"min_lower": bd.min_lower, "max_upper": bd.max_upper, "grid": m})
    return Verdict.unknown({"grid": bd.m})


def within_unit_displacement(g: CoverElement, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Certified ``|F(x) - x| < 1`` for all ``x``."""
    for m in _grid_sizes(budget):
        bd = displacement_bounds(g, m)
        if bd.min_lower > -1 and bd.max_upper < 1:
            return Verdict.yes({"grid": m})
        if bd.min_at_sample <= -1 or bd.max_at_sample >= 1:
            return Verdict.no({"grid": m})
    return Verdict.unknown({"grid": bd.m})



# -- quasimorphisms ----------------------------------------------------------------

def _orbit_params(g: CoverElement):
    a, b, c, d = g.mat.entries()
    return [a, b, c, d, _base_angle(a, c)], evaluation_error(g.mat)


def translation_number_enclosure(g: CoverElement, n: int) -> Enclosure:
    """``[(F^n(0) - 1)/n, (F^n(0) + 1)/n]`` from outward-rounded point iteration."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if _is_projective_identity(g.mat):
        return Enclosure(Fraction(g.winding * n - 1, n), Fraction(g.winding * n + 1, n))
    vs, eps = _orbit_params(g)
    raw, _, _ = _orbit.run_orbit(_orbit.KIND_PROJECTIVE, _orbit._EMPTY, vs, _orbit._EMPTY,
                                 g.winding, eps, [n])
    (lo, hi), = raw.values()
    lo = Fraction(lo[0]) + Fraction(lo[1])
    hi = Fraction(hi[0]) + Fraction(hi[1])
    return Enclosure((lo - 1) / n, (hi + 1) / n)


def iwasawa_pi(g: CoverElement) -> float:
    """Compact coordinate of the lifted Iwasawa decomposition, with ``pi(z) = 1``.

    ``mat = K A N`` with ``K`` a rotation by ``theta``; ``theta / pi`` is taken
    modulo 1 in ``[0, 1)`` (the projective rotation part) and the winding is
    added.
    """
    return _pi_of_array(g.mat.array(), g.winding)


def _pi_of_array(arr: np.ndarray, winding: int) -> float:
    q, r = np.linalg.qr(arr)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    theta = math.atan2(q[1, 0], q[0, 0]) / math.pi
    theta -= math.floor(theta)
    if theta >= 1.0:
        theta = 0.0
    return theta + winding


# Powers g^n overflow a determinant-one representation for hyperbolic g, so the
# power used by gw_mu keeps matrices rescaled to unit norm; the projective
# action and the K-angle are invariant under positive rescaling.

def _scaled_lift0(arr: np.ndarray) -> float:
    return _base_angle(arr[0, 0], arr[1, 0])


def _scaled_lift(arr: np.ndarray, det: float, x: float) -> float:
    a, b, c, d = arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1]
    n = math.floor(x)
    r = x - n
    s = math.sin(math.pi * r)
    dot = (a * a + c * c) * math.cos(math.pi * r) + (a * b + c * d) * s
    return _base_angle(a, c) + math.atan2(det * s, dot) / math.pi + n


def _scaled_mul(p, q):
    (A, da, wa), (B, db, wb) = p, q
    C = A @ B
    s = float(np.abs(C).max())
    C = C / s
    dc = da * db / (s * s)
    inner = _scaled_lift(B, db, 0.0) + wb
    target = _scaled_lift(A, da, inner) + wa
    return C, dc, _round_winding(target - _scaled_lift0(C))


def _power_pi(g: CoverElement, n: int) -> float:
    base = (g.mat.array(), 1.0, g.winding)
    acc = (np.eye(2), 1.0, 0)
    while n:
        if n & 1:
            acc = _scaled_mul(acc, base)
        n >>= 1
        if n:
            base = _scaled_mul(base, base)
    return _pi_of_array(acc[0], acc[2])


def gw_mu(g: CoverElement, n: int, bound: float = GW_BOUND) -> Enclosure:
    """``pi(g^n)/n`` widened by ``bound/n``; contains the homogenization when
    ``|pi - mu| <= bound`` holds."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = Fraction(_power_pi(g, n))
    return Enclosure((p - Fraction(bound)) / n, (p + Fraction(bound)) / n)


# -- Hilgert-Hofmann trichotomy ------------------------------------------------

@dataclass(frozen=True)
class Classification:
    in_pos_interior: Verdict
    in_neg_interior: Verdict
    in_exp_image: Verdict

    @property
    def flags(self):
        return (self.in_pos_interior, self.in_neg_interior, self.in_exp_image)

    @property
    def decided(self) -> bool:
        return any(v.is_yes for v in self.flags)

    @property
    def contradicts(self) -> bool:
        """All three flags certified No: the trichotomy would be violated."""
        return all(v.is_no for v in self.flags)


def in_exp_image(g: CoverElement, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Membership in the image of the exponential map.

    Elliptic matrices and central elements lie on lifted one-parameter
    rotation groups; otherwise ``g`` is an exponential iff its lift has a
    fixed point.  ``|F - x| < 1`` certifies membership without deciding the
    trace class, since a non-elliptic element with integer displacement
    ``n = 0`` at its fixed directions has a fixed point.
    """
    m = g.mat
    if _is_projective_identity(m):
        return Verdict.yes({"central": g.winding})
    tr = abs(m.trace)
    if tr < 2 - 1e-9:
        return Verdict.yes({"elliptic_trace": m.trace})
    fp = has_fixed_point(g, budget)
    if fp.is_yes:
        return Verdict.yes({"fixed_point": fp.certificate})
    near = within_unit_displacement(g, budget)
    if near.is_yes:
        return Verdict.yes({"unit_displacement": near.certificate})
    if fp.is_no and (tr > 2 + 1e-9 or _exact_parabolic(m)):
        return Verdict.no({"trace": m.trace, "fixed_point": fp.certificate})
    return Verdict.unknown({"trace": m.trace})


def hilgert_hofmann_classify(g: CoverElement, budget: int = DEFAULT_BUDGET) -> Classification:
    return Classification(geometric_positive(g, True, budget),
                          geometric_positive(inv(g), True, budget),
                          in_exp_image(g, budget))


def wedge_member(X: LieAlgebraElement, t_samples: Sequence[float], budget: int = DEFAULT_BUDGET) -> Verdict:
    """``exp(tX) >= e`` for every sampled ``t``, cross-checked with the cone test."""
    if not t_samples:
        raise ValueError("t_samples must be non-empty")
    verdicts = [(t, geometric_positive(exp_cover(X, t), False, budget)) for t in t_samples]
    cone = cone_contains(X)
    if any(v.is_no for _, v in verdicts):
        t_bad = next(t for t, v in verdicts if v.is_no)
        out = Verdict.no
        cert = {"t": t_bad}
    elif all(v.is_yes for _, v in verdicts):
        out, cert = Verdict.yes, {}
    else:
        out, cert = Verdict.unknown, {}
    result = out(cert)
    cert["cone"] = cone.state.value
    cert["agrees"] = cone.is_unknown or result.is_unknown or cone.state is result.state
    return result


# -- sampling -----------------------------------------------------------------

CLASSES = ("elliptic", "parabolic", "hyperbolic", "product")

_UNIMODULAR_GENERATORS = (
    ProjectiveMatrix(1.0, 1.0, 0.0, 1.0), ProjectiveMatrix(1.0, -1.0, 0.0, 1.0),
    ProjectiveMatrix(1.0, 0.0, 1.0, 1.0), ProjectiveMatrix(1.0, 0.0, -1.0, 1.0),
)


def random_lie_algebra(rng: np.random.Generator, scale: float = 1.0) -> LieAlgebraElement:
    a, b, c = rng.normal(0.0, scale, 3)
    return LieAlgebraElement(float(a), float(b), float(c))


def random_cone_element(rng: np.random.Generator, scale: float = 1.0) -> LieAlgebraElement:
    """Rejection-sampled member of the positive cone (certified Yes)."""
    while True:
        X = random_lie_algebra(rng, scale)
        if cone_contains(X).is_yes:
            return X
        X = LieAlgebraElement(-X.a, -X.b, -X.c)
        if cone_contains(X).is_yes:
            return X


def _random_conjugator(rng: np.random.Generator) -> ProjectiveMatrix:
    return exp_matrix(random_lie_algebra(rng, 0.5))


def _random_integer_conjugator(rng: np.random.Generator) -> ProjectiveMatrix:
    m = ProjectiveMatrix.identity()
    for _ in range(int(rng.integers(0, 4))):
        m = m @ _UNIMODULAR_GENERATORS[int(rng.integers(0, 4))]
    return m


def random_cover_element(seed, cls: str = "elliptic", winding_range=(-2, 2)) -> CoverElement:
    """Seeded sampler by trace class.

    Parabolic samples are conjugated by integer matrices so the stored
    matrix stays exactly parabolic.
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown class {cls!r}; expected one of {CLASSES}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = winding_range

    def draw_w():
        return int(rng.integers(lo, hi + 1))

    if cls == "elliptic":
        theta = float(rng.uniform(0.02, 0.98)) * math.pi
        c, s = math.cos(theta), math.sin(theta)
        h = _random_conjugator(rng)
        m = h @ ProjectiveMatrix(c, -s, s, c) @ h.inverse()
        return CoverElement(m, draw_w())
    if cls == "parabolic":
        s = float(rng.choice([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]))
        h = _random_integer_conjugator(rng)
        m = h @ ProjectiveMatrix(1.0, s, 0.0, 1.0) @ h.inverse()
        return CoverElement(m, draw_w())
    if cls == "hyperbolic":
        lam = math.exp(float(rng.uniform(0.2, 1.5)))
        h = _random_conjugator(rng)
        m = h @ ProjectiveMatrix(lam, 0.0, 0.0, 1.0 / lam) @ h.inverse()
        return CoverElement(m, draw_w())
    out = CoverElement.identity()
    for _ in range(int(rng.integers(2, 5))):
        factor = random_cover_element(rng, CLASSES[int(rng.integers(0, 3))], winding_range)
        candidate = mul(out, factor)
        # keep products moderately conditioned so their powers stay representable
        if candidate.mat.sq_norm() <= PRODUCT_NORM_CAP:
            out = candidate
    return out


# -- serialization ---------------------------------------------------------

def to_json(g: CoverElement) -> str:
    mat = ", ".join(format(v, ".17g") for v in g.mat.entries())
    return f'{{"type": "sl2cover", "mat": [{mat}], "winding": {g.winding}}}'


def from_json_obj(obj) -> CoverElement:
    if not isinstance(obj, dict) or obj.get("type") != "sl2cover":
        raise InvariantError("not an sl2cover object")
    try:
        a, b, c, d = (float(v) for v in obj["mat"])
        w = obj["winding"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError(f"malformed sl2cover element: {exc}") from exc
    if not isinstance(w, int) or isinstance(w, bool):
        raise InvariantError("winding must be an integer")
    if abs(a * d - b * c - 1) > PARSE_DET_TOL:
        raise InvariantError(f"determinant {a * d - b * c} too far from 1")
    return CoverElement(ProjectiveMatrix(a, b, c, d), w)


def from_json(text: str) -> CoverElement:
    return from_json_obj(json.loads(text))


# -- oracle --------------------------------------------------------------------

class CoverOracle(GroupOracle):
    """The cover of PSL(2, R) with the translation number as quasimorphism."""

    name = "sl2"

    def __init__(self, budget: int = DEFAULT_BUDGET, winding_range=(-2, 2), classes=CLASSES):
        self.identity = CoverElement.identity()
        self.budget = budget
        self.winding_range = winding_range
        self.classes = tuple(classes)

    def mul(self, g, h):
        return mul(g, h)

    def inv(self, g):
        return inv(g)

    def equal(self, g, h):
        return cover_equal(g, h)

    def qm_enclosure(self, g, n):
        return translation_number_enclosure(g, n)

    def positive(self, g):
        return geometric_positive(g, False, self.budget)

    def strictly_positive(self, g):
        return geometric_positive(g, True, self.budget)

    def sample(self, rng):
        cls = self.classes[int(rng.integers(0, len(self.classes)))]
        return random_cover_element(rng, cls, self.winding_range)

    def encode(self, g):
        return g.to_json_obj()


__all__ = [
    "ProjectiveMatrix", "CoverElement", "LieAlgebraElement", "BoundaryVectorField", "Classification",
    "DisplacementBounds", "CoverOracle", "NumericInstabilityError", "InvariantError", "CertificateConflict",
    "boundary_lift_eval", "mul", "inv", "conj", "power", "central", "rotation", "exp_matrix", "exp_cover",
    "translation_number_enclosure", "iwasawa_pi", "gw_mu", "cone_contains", "geometric_positive",
    "has_fixed_point", "power_positive", "evaluation_error", "in_exp_image", "hilgert_hofmann_classify", "wedge_member", "random_cover_element",
    "random_lie_algebra", "random_cone_element", "displacement_bounds", "to_json", "from_json",
]
