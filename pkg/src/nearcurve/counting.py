"""Counting a in [0, q] with ||q f_i(a/q)|| < delta for both components."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _fp
from .curves import MongeCurve3, RationalPoly

CHUNK = 2 ** 16


class UnsupportedError(ValueError):
    pass


@dataclass(frozen=True)
class CountResult:
    q: int
    delta: float
    count_lo: int
    count_hi: int
    uncertain: int
    elapsed: float  # milliseconds
    exact: bool = False

    @property
    def count(self) -> int:
        if self.count_lo != self.count_hi:
            raise ValueError("count is uncertain; use count_lo/count_hi")
        return self.count_lo


def guard_band(q: int) -> float:
    return 1e-9 * max(q, 1e3)


def check_args(q, delta, *, delta_max: float = 0.5) -> None:
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    if not 0 < delta < delta_max:
        raise ValueError(f"delta must lie in (0, {delta_max}), got {delta!r}")


def a_range(curve: MongeCurve3, q: int) -> tuple[int, int]:
    """Inclusive range of a with a/q in the curve's domain."""
    lo, hi = Fraction(curve.domain[0]), Fraction(curve.domain[1])
    return math.ceil(lo * q), math.floor(hi * q)


# --------------------------------------------------------------------------
# exact integer arithmetic for q f(a/q)
# --------------------------------------------------------------------------


class ScaledPoly:
    """q f(a/q) written as N(a) / Den with integer N and Den, for fixed q."""

    def __init__(self, poly: RationalPoly, q: int):
        D = poly.common_denominator
        d = max(poly.degree, 1)
        self.q = q
        self.den = D * q ** (d - 1)
        self.terms = [
            (k, int(c * D) * q ** (d - k)) for k, c in enumerate(poly.coeffs) if c != 0
        ]

    def residue(self, a: int) -> int:
        return sum(n * a ** k for k, n in self.terms) % self.den

    def norm_lt(self, a: int, delta: Fraction) -> bool:
        r = self.residue(a)
        return min(r, self.den - r) * delta.denominator < delta.numerator * self.den

    def norm(self, a: int) -> Fraction:
        r = self.residue(a)
        return Fraction(min(r, self.den - r), self.den)


def rigorous_error(poly: RationalPoly, q: int) -> float:
    """A-priori bound on the float error of ||q p(a/q)|| for a/q in [0, 1].

    Covers rounding of a/q and of the coefficients, the compensated Horner
    residual and the final reduction, with a safety factor of 2.
    """
    s = sum((k + 2) * abs(float(c)) for k, c in enumerate(poly.coeffs))
    return 8 * _fp.UNIT_ROUNDOFF * (q * s + 1.0)


def scaled_norms(component, q: int, a: np.ndarray) -> np.ndarray:
    """||q f(a/q)|| in floating point (compensated for polynomial components)."""
    x = a.astype(float) / q
    if isinstance(component, RationalPoly):
        s, c = component.comp_eval(x)
        h, l = _fp.two_prod(float(q), s)
        return _fp.dist_to_int(h, l + q * c)
    return _fp.dist_to_int(q * np.asarray(component(x, 0), dtype=float))


# --------------------------------------------------------------------------
# counting
# --------------------------------------------------------------------------


def _chunk_float(curve, q, delta, band, a0, a1):
    a = np.arange(a0, a1, dtype=np.int64)
    worst = np.maximum(scaled_norms(curve.f1, q, a), scaled_norms(curve.f2, q, a))
    return int(np.count_nonzero(worst < delta - band)), int(np.count_nonzero(worst < delta + band))


def _chunk_exact(curve, q, delta, a0, a1):
    p1, p2 = curve.coeff_form
    band = max(rigorous_error(p1, q), rigorous_error(p2, q))
    a = np.arange(a0, a1, dtype=np.int64)
    worst = np.maximum(scaled_norms(p1, q, a), scaled_norms(p2, q, a))
    sure = int(np.count_nonzero(worst < delta - band))
    unsure = a[(worst >= delta - band) & (worst < delta + band)]
    if unsure.size:
        s1, s2 = ScaledPoly(p1, q), ScaledPoly(p2, q)
        d = Fraction(delta)
        sure += sum(1 for v in unsure.tolist() if s1.norm_lt(v, d) and s2.norm_lt(v, d))
    return sure, sure


def _chunks(a_lo, a_hi, size=CHUNK):
    return [(s, min(s + size, a_hi + 1)) for s in range(a_lo, a_hi + 1, size)]


def count_near(
    curve: MongeCurve3,
    q: int,
    delta: float,
    exact: bool | None = None,
    workers: int = 1,
) -> CountResult:
    """A(q, delta) for the curve.

    With ``exact`` (the default whenever the curve is polynomial) the count is
    exact: a float screen with a rigorous error bound decides almost every a,
    and the remaining borderline values are settled in integer arithmetic.
    Otherwise the float path reports a certainty interval using the guard band
    ``1e-9 * max(q, 1e3)``.
    """
    check_args(q, delta)
    if exact is None:
        exact = curve.coeff_form is not None
    if exact and curve.coeff_form is None:
        raise UnsupportedError(f"curve {curve.id!r} has no exact coefficient form")
    t0 = time.perf_counter()
    a_lo, a_hi = a_range(curve, q)
    chunks = _chunks(a_lo, a_hi)
    if exact:
        job = lambda c: _chunk_exact(curve, q, delta, *c)  # noqa: E731
    else:
        band = guard_band(q)
        job = lambda c: _chunk_float(curve, q, delta, band, *c)  # noqa: E731
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    lo = sum(p[0] for p in parts)
    hi = sum(p[1] for p in parts)
    return CountResult(
        q=q, delta=delta, count_lo=lo, count_hi=hi, uncertain=hi - lo,
        elapsed=1e3 * (time.perf_counter() - t0), exact=bool(exact),
    )


def count_on_curve(curve: MongeCurve3, q: int) -> int:
    """Number of a in [0, q] with q f1(a/q) and q f2(a/q) both integers."""
    if curve.coeff_form is None:
        raise UnsupportedError(f"curve {curve.id!r} has no exact coefficient form")
    if q < 1:
        raise ValueError("q must be positive")
    s1, s2 = (ScaledPoly(p, q) for p in curve.coeff_form)
    a_lo, a_hi = a_range(curve, q)
    return sum(1 for a in range(a_lo, a_hi + 1) if s1.residue(a) == 0 and s2.residue(a) == 0)
