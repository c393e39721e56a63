"""Rational-point sums near planar curves, linear exponential sums and E(q, delta)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curves import MongeCurve3, PlanarCurve
from .linearize import _params, aggregate

MAX_PAIRS = 10 ** 8
_CELLS = 2 ** 21


# --------------------------------------------------------------------------
# linear exponential sums
# --------------------------------------------------------------------------


def dist_to_int(x):
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.rint(x))


def linear_expsum(gamma, N: int):
    """|sum_{n=0}^{N-1} e(n gamma)| by the closed form |sin(pi N gamma) / sin(pi gamma)|."""
    g = np.asarray(gamma, dtype=float)
    g = g - np.rint(g)
    # N sinc(N g) / sinc(g) is the same ratio, stable as g -> 0; sinc(g) >= 2/pi on |g| <= 1/2
    out = np.abs(N * np.sinc(N * g) / np.sinc(g))
    return out if out.ndim else float(out)


def linear_expsum_direct(gamma: float, N: int) -> float:
    n = np.arange(N)
    return float(abs(np.exp(2j * math.pi * n * gamma).sum()))


# --------------------------------------------------------------------------
# E(q, delta)
# --------------------------------------------------------------------------


def frequency_pairs(J: int, half: bool = False) -> np.ndarray:
    """All (j1, j2) in [-J, J]^2 minus the origin; with ``half`` one of each +-pair."""
    j1, j2 = np.meshgrid(np.arange(-J, J + 1), np.arange(-J, J + 1), indexing="ij")
    j1, j2 = j1.ravel(), j2.ravel()
    keep = (j1 > 0) | ((j1 == 0) & (j2 > 0)) if half else (j1 != 0) | (j2 != 0)
    return np.stack([j1[keep], j2[keep]], axis=1)


def error_term(curve: MongeCurve3, q: int, delta: float, q0: int | None = None) -> float:
    """E(q, delta) = 9 delta^2 sum_{s<=r} sum_{(j1,j2)!=0} min(q0, ||j1 f1'(x_s) + j2 f2'(x_s)||^-1)."""
    bp = _params(curve, q, delta, q0)
    J = math.floor(1 / delta)
    pairs = frequency_pairs(J, half=True).astype(float)
    x = (bp.q0 * np.arange(bp.r + 1)).astype(float) / q
    d1 = np.asarray(curve.f1(x, 1), dtype=float)
    d2 = np.asarray(curve.f2(x, 1), dtype=float)
    d1 -= np.rint(d1)
    d2 -= np.rint(d2)
    partial = []
    step = max(1, _CELLS // len(pairs))
    for k in range(0, x.size, step):
        gamma = np.outer(d1[k:k + step], pairs[:, 0]) + np.outer(d2[k:k + step], pairs[:, 1])
        norm = dist_to_int(gamma)
        with np.errstate(divide="ignore"):
            terms = np.minimum(float(bp.q0), 1.0 / norm)
        partial.append(float(terms.sum()))
    return 9 * delta * delta * 2 * math.fsum(partial)


@dataclass(frozen=True)
class ErrorInequality:
    q: int
    delta: float
    q0: int
    B1: int
    B2: int
    E: float
    upper_rhs: float  # 9 delta^2 (q + q0) + E
    lower_rhs: float  # delta^2 (q - q0) - E
    upper_holds: bool
    lower_holds: bool


def error_inequalities(curve: MongeCurve3, q: int, delta: float, rtol: float = 1e-6) -> ErrorInequality:
    """B1 <= 9 delta^2 (q + q0) + E and B2 >= delta^2 (q - q0) - E, certified sides."""
    bp = _params(curve, q, delta, None)
    E = error_term(curve, q, delta)
    b1 = aggregate(curve, q, delta, side="hi").B1
    b2 = aggregate(curve, q, delta, side="lo").B2
    up = 9 * delta ** 2 * (q + bp.q0) + E
    lo = delta ** 2 * (q - bp.q0) - E
    return ErrorInequality(
        q=q, delta=delta, q0=bp.q0, B1=b1, B2=b2, E=E, upper_rhs=up, lower_rhs=lo,
        upper_holds=b1 <= up * (1 + rtol), lower_holds=b2 >= lo - rtol * abs(lo),
    )


# --------------------------------------------------------------------------
# dual composition f = f2' o (f1')^{-1}
# --------------------------------------------------------------------------


def composition_curvature(curve: MongeCurve3, x):
    """(f1'' f2''' - f2'' f1''') / (f1'')^3 at x, i.e. f'' at beta = f1'(x)."""
    a2, a3 = curve.f1(x, 2), curve.f1(x, 3)
    b2, b3 = curve.f2(x, 2), curve.f2(x, 3)
    return (a2 * b3 - b2 * a3) / a2 ** 3


def inverse_slope(curve: MongeCurve3, beta):
    """x in the domain with f1'(x) = beta (bisection; f1'' must not change sign)."""
    lo_x, hi_x = curve.domain
    beta = np.asarray(beta, dtype=float)
    lo = np.full_like(beta, lo_x)
    hi = np.full_like(beta, hi_x)
    sign = 1.0 if float(curve.f1(0.5 * (lo_x + hi_x), 2)) > 0 else -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid)))):
            break
        right = sign * (curve.f1(mid, 1) - beta) < 0
        lo, hi = np.where(right, mid, lo), np.where(right, hi, mid)
    return 0.5 * (lo + hi)


def composition(curve: MongeCurve3, beta):
    return curve.f2(inverse_slope(curve, beta), 1)


# --------------------------------------------------------------------------
# rational points near planar curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaSumReport:
    U: float
    delta: float
    count_or_sum: float
    bound: float
    ratio: float
    pairs: int


def _u_range(U: float) -> range:
    return range(math.ceil(U), math.ceil(2 * U))


def _t_range(K, u: int) -> range:
    k0, k1 = Fraction(K[0]), Fraction(K[1])
    return range(math.ceil(k0 * u), math.floor(k1 * u) + 1)


def _check_size(K, U):
    us = _u_range(U)
    rough = len(us) * ((float(K[1]) - float(K[0])) * 2 * U + 1)
    if rough > 2 * MAX_PAIRS:
        raise ValueError(f"about {rough:.3g} (u, t) pairs exceed the cap {MAX_PAIRS}")
    est = sum(len(_t_range(K, u)) for u in us)
    if est > MAX_PAIRS:
        raise ValueError(f"{est} (u, t) pairs exceed the cap {MAX_PAIRS}")
    return est


def _norms_for_u(phi: PlanarCurve, u: int, t: np.ndarray):
    """Exact residues (as float fractions) of ||u phi(t/u)|| for all t, or float fallback."""
    if phi.poly is None:
        v = u * np.asarray(phi.f(t / u), dtype=float)
        return dist_to_int(v), None
    p = phi.poly
    D = p.common_denominator
    d = max(p.degree, 1)
    den = D * u ** (d - 1)
    terms = [(k, int(c * D) * u ** (d - k)) for k, c in enumerate(p.coeffs) if c != 0]
    tmax = int(np.max(np.abs(t))) if t.size else 0
    if sum(abs(n) for _, n in terms) * max(tmax, 1) ** d < 2 ** 62:
        ti = t.astype(np.int64)
        num = np.zeros_like(ti)
        for k, n in terms:
            num += n * ti ** k
        r = np.mod(num, den)
        r = np.minimum(r, den - r)
    else:
        r = np.array([min(x, den - x) for x in (sum(n * int(v) ** k for k, n in terms) % den for v in t)],
                     dtype=object)
    return r, den


def _ceil_threshold(delta: Fraction, den: int) -> int:
    # for integer r: r < delta * den  <=>  r < ceil(delta * den)
    return math.ceil(delta * den)


def _enumerate(phi, K, U):
    for u in _u_range(U):
        t = np.arange(_t_range(K, u).start, _t_range(K, u).stop)
        yield u, t, _norms_for_u(phi, u, t)


def lemma3_count(phi: PlanarCurve, K, delta: float, U: float, epsilon: float = 0.1) -> LemmaSumReport:
    """#{(u, t): U <= u < 2U, t/u in K, ||u phi(t/u)|| < delta} against delta^(1-eps) U^2 + U log 2U."""
    if not 0 < delta < 0.25:
        raise ValueError("delta must lie in (0, 1/4)")
    if U < 1:
        raise ValueError("U must be >= 1")
    pairs = _check_size(K, U)
    d = Fraction(delta)
    count = 0
    for _, t, (r, den) in _enumerate(phi, K, U):
        if den is None:
            count += int(np.count_nonzero(r < delta))
        else:
            count += int(np.count_nonzero(r < _ceil_threshold(d, den)))
    bound = delta ** (1 - epsilon) * U * U + U * math.log(2 * U)
    return LemmaSumReport(U=U, delta=delta, count_or_sum=float(count), bound=bound,
                          ratio=count / bound, pairs=pairs)


def lemma4_sum(phi: PlanarCurve, K, delta: float, Lambda: float, U: float) -> LemmaSumReport:
    """sum of ||u phi(t/u)||^-Lambda over ||u phi(t/u)|| >= delta, against U^2 + delta^-Lambda U log 2U."""
    if not 0 < Lambda < 1:
        raise ValueError("Lambda must lie in (0, 1)")
    if not 0 < delta < 0.25:
        raise ValueError("delta must lie in (0, 1/4)")
    if U < 1:
        raise ValueError("U must be >= 1")
    pairs = _check_size(K, U)
    d = Fraction(delta)
    parts = []
    for _, t, (r, den) in _enumerate(phi, K, U):
        if den is None:
            norms = r[r >= delta]
        else:
            keep = r >= _ceil_threshold(d, den)
            norms = np.asarray([int(v) / den for v in r[keep]], dtype=float) if r.dtype == object \
                else r[keep].astype(float) / den
        parts.append(math.fsum(norms ** -Lambda))
    total = math.fsum(parts)
    bound = U * U + delta ** -Lambda * U * math.log(2 * U)
    return LemmaSumReport(U=U, delta=delta, count_or_sum=total, bound=bound,
                          ratio=total / bound, pairs=pairs)
