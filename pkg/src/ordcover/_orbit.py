"""Certified orbit iteration for monotone degree-one lifts.

Both concrete groups act on the line by non-decreasing maps ``F`` with
``F(x + 1) = F(x) + 1``.  Iterating a lower chain ``a <- F(a) - eps`` and an
upper chain ``b <- F(b) + eps`` (``eps`` at least the evaluation error) keeps
``a_t <= F^t(0) <= b_t`` by monotonicity.  Points are carried as an integer
part plus a fraction in ``[0, 1)`` so precision does not decay as the orbit
drifts.

Trapping shortcut: if ``[a_t, b_t]`` lies inside ``[a_{t-p}, b_{t-p}] + m``
then ``F^p - m`` maps that interval into itself, so the translation number is
exactly ``m / p`` and every later orbit point is enclosed by a stored one
shifted by a multiple of ``m``.

Near a semi-stable periodic orbit the rounding can push a chain through the
orbit, so the gap between the chains may grow linearly in ``n``.  The bounds
stay valid; they just stop tightening.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

KIND_PL = 0
KIND_PROJECTIVE = 1

PERIOD_MAX = 256
CHECK_STRIDE = 256


@njit(cache=True, nogil=True)
def _eval_frac(kind, xs, vs, ss, r):
    """Value at ``r`` in [0, 1) of the lift, without winding."""
    if kind == KIND_PL:
        i = xs.shape[0] - 1
        while i > 0 and xs[i] > r:
            i -= 1
        return vs[i] + ss[i] * (r - xs[i])
    # projective: vs = (a, b, c, d, base)
    a, b, c, d, base = vs[0], vs[1], vs[2], vs[3], vs[4]
    s = math.sin(math.pi * r)
    co = math.cos(math.pi * r)
    sweep = math.atan2(s, (a * a + c * c) * co + (a * b + c * d) * s) / math.pi
    diff = math.atan2(c * co + d * s, a * co + b * s) / math.pi - base - sweep
    return base + sweep + (diff - math.floor(diff + 0.5))


@njit(cache=True, nogil=True)
def _le(ia, ra, ib, rb):
    # exact test of ia + ra <= ib + rb for fractions in [0, 1)
    if ia != ib:
        return ia < ib
    return ra <= rb


@njit(cache=True, nogil=True)
def _split(y):
    m = math.floor(y)
    r = y - m
    if r >= 1.0:
        r -= 1.0
        m += 1.0
    return np.int64(m), r


@njit(cache=True, nogil=True)
def orbit_bounds(kind, xs, vs, ss, shift, eps, checkpoints, pmax, stride):
    """Lower/upper enclosures of ``F^n(0)`` at each sorted checkpoint ``n``.

    ``shift`` is an integer added after every evaluation (the winding).
    Returns ``(lo_int, lo_frac, hi_int, hi_frac, period, jump)``; ``period`` is
    0 unless the trapping shortcut fired, in which case the translation number
    equals ``jump / period`` exactly.
    """
    K = checkpoints.shape[0]
    lo_i = np.zeros(K, np.int64)
    lo_r = np.zeros(K)
    hi_i = np.zeros(K, np.int64)
    hi_r = np.zeros(K)
    H = pmax + 1
    ring_ai = np.zeros(H, np.int64)
    ring_ar = np.zeros(H)
    ring_bi = np.zeros(H, np.int64)
    ring_br = np.zeros(H)
    ai, ar, bi, br = np.int64(0), 0.0, np.int64(0), 0.0
    t = 0
    ci = 0
    while ci < K and checkpoints[ci] == 0:
        ci += 1
    N = checkpoints[K - 1] if K > 0 else 0
    period = 0
    jump = np.int64(0)
    while t < N:
        m, ar = _split(_eval_frac(kind, xs, vs, ss, ar) - eps)
        ai += m + shift
        m, br = _split(_eval_frac(kind, xs, vs, ss, br) + eps)
        bi += m + shift
        t += 1
        h = t % H
        ring_ai[h], ring_ar[h], ring_bi[h], ring_br[h] = ai, ar, bi, br
        while ci < K and checkpoints[ci] == t:
            lo_i[ci], lo_r[ci], hi_i[ci], hi_r[ci] = ai, ar, bi, br
            ci += 1
        if t % stride == 0 and ci < K:
            top = pmax if pmax < t else t
            for p in range(1, top + 1):
                j = (t - p) % H
                d = ai - ring_ai[j]
                for mm in (d - 1, d, d + 1):
                    if _le(ring_ai[j] + mm, ring_ar[j], ai, ar) and _le(bi, br, ring_bi[j] + mm, ring_br[j]):
                        period = p
                        jump = mm
                        break
                if period:
                    break
            if period:
                break
    if period:
        base = t - period
        while ci < K:
            q, rr = divmod(checkpoints[ci] - base, period)
            j = (base + rr) % H
            lo_i[ci] = ring_ai[j] + q * jump
            lo_r[ci] = ring_ar[j]
            hi_i[ci] = ring_bi[j] + q * jump
            hi_r[ci] = ring_br[j]
            ci += 1
    return lo_i, lo_r, hi_i, hi_r, period, jump


_EMPTY = np.zeros(1)


def run_orbit(kind, xs, vs, ss, shift, eps, checkpoints, pmax=PERIOD_MAX, stride=CHECK_STRIDE):
    cps = np.asarray(sorted(set(int(n) for n in checkpoints)), dtype=np.int64)
    res = orbit_bounds(kind, np.asarray(xs, float), np.asarray(vs, float), np.asarray(ss, float),
                       np.int64(shift), float(eps), cps, int(pmax), int(stride))
    lo_i, lo_r, hi_i, hi_r, period, jump = res
    bounds = {int(n): ((int(lo_i[k]), float(lo_r[k])), (int(hi_i[k]), float(hi_r[k])))
              for k, n in enumerate(cps)}
    return bounds, int(period), int(jump)


__all__ = ["KIND_PL", "KIND_PROJECTIVE", "run_orbit", "orbit_bounds", "_EMPTY"]
