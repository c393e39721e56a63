"""Measures of {x in I : ||j1 x + j2 f(x)|| < lambda} and the frequency-sum bound.

Frequency pairs split into THETA1 (|j1| > 2M|j2|, so |F'| >= |j1|/2 on I) and
THETA2 (a critical point x0 = g(j1/j2) of F on the extended curve).  On
THETA2 the critical value is read off the dual curve, F(x0) = j2 f*(j1/j2).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .curves import DualCurve, PlanarCurve, dual_curve

THETA1 = "theta1"
THETA2 = "theta2"
ROOT_TOL = 1e-13
_LEVELS_PER_CHUNK = 4_000_000


@dataclass(frozen=True)
class LevelSetQuery:
    planar: PlanarCurve
    j1: int
    j2: int
    lam: float | None
    theta_class: str
    p_range: tuple[int, int]
    x0: float | None = None
    F_x0: float | None = None
    p0: int | None = None
    dual: DualCurve | None = field(default=None, repr=False, compare=False)

    def F(self, x):
        return self.j1 * np.asarray(x, dtype=float) + self.j2 * self.planar.f(x)

    def dF(self, x):
        return self.j1 + self.j2 * self.planar.df(x)


@dataclass(frozen=True)
class MeasureReport:
    total: float
    per_p: dict[int, float]
    intervals: list[tuple[float, float]]


def classify(planar: PlanarCurve, j1: int, j2: int, lam: float | None = None,
             dual: DualCurve | None = None) -> LevelSetQuery:
    if j1 == 0 and j2 == 0:
        raise ValueError("(j1, j2) must not be (0, 0)")
    if lam is not None and not 0 < lam < 0.5:
        raise ValueError("lambda must lie in (0, 1/2)")
    bound = math.floor(planar.C * max(abs(j1), abs(j2)))
    if abs(j1) > 2 * planar.M * abs(j2):
        return LevelSetQuery(planar, j1, j2, lam, THETA1, (-bound, bound))
    dual = dual or dual_curve(planar)
    y = j1 / j2
    x0 = dual.g(y)
    F0 = j2 * dual.fstar(y)
    p0 = math.ceil(F0 - 0.5)
    return LevelSetQuery(planar, j1, j2, lam, THETA2, (-bound, bound), x0=x0, F_x0=F0, p0=p0, dual=dual)


# --------------------------------------------------------------------------
# root isolation
# --------------------------------------------------------------------------


def _critical_point(query: LevelSetQuery) -> float | None:
    if query.j2 == 0:
        return None
    if query.x0 is not None:
        return query.x0
    dual = query.dual or dual_curve(query.planar)
    return dual.g(query.j1 / query.j2)


def _monotone_pieces(query: LevelSetQuery) -> list[tuple[float, float]]:
    xi, eta = query.planar.interval
    x0 = _critical_point(query)
    if x0 is not None and xi < x0 < eta:
        return [(xi, x0), (x0, eta)]
    return [(xi, eta)]


def _invert_bisect(query, u, v, targets, increasing):
    lo = np.full(targets.shape, u)
    hi = np.full(targets.shape, v)
    iters = max(1, math.ceil(math.log2(max(v - u, ROOT_TOL) / ROOT_TOL)) + 1)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = query.F(mid) < targets
        right = below if increasing else ~below
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


def _quadratic_form(query):
    """F = A (x - xv)^2 + Fv, or None when F is linear or f is not quadratic."""
    p = query.planar.poly
    if p is None or p.degree != 2 or query.j2 == 0:
        return None
    a0, a1, a2 = (float(c) for c in p.coeffs)
    A = query.j2 * a2
    B = query.j1 + query.j2 * a1
    return A, -B / (2 * A), query.j2 * a0 - B * B / (4 * A)


def _invert_closed(query, u, v, targets):
    A, xv, Fv = _quadratic_form(query)
    side = 1.0 if 0.5 * (u + v) > xv else -1.0
    x = xv + side * np.sqrt(np.maximum((targets - Fv) / A, 0.0))
    return np.clip(x, u, v)


def measure_sublevel(query: LevelSetQuery, lam: float | None = None, method: str = "auto") -> MeasureReport:
    """|{x in I : ||F(x)|| < lambda}| with F = j1 x + j2 f, by root isolation on monotone pieces.

    ``method`` is ``"bisect"``, ``"closed"`` (quadratic f only) or ``"auto"``.
    """
    lam = query.lam if lam is None else lam
    if lam is None or not 0 < lam < 0.5:
        raise ValueError("lambda must lie in (0, 1/2)")
    if method == "auto":
        method = "closed" if _quadratic_form(query) is not None else "bisect"
    if method == "closed" and _quadratic_form(query) is None:
        method = "bisect"
    per_p: dict[int, float] = {}
    intervals: list[tuple[float, float]] = []
    for u, v in _monotone_pieces(query):
        Fu, Fv = float(query.F(u)), float(query.F(v))
        increasing = Fv >= Fu
        lo, hi = min(Fu, Fv), max(Fu, Fv)
        ps = np.arange(math.floor(lo - lam) + 1, math.ceil(hi + lam))
        a = np.maximum(ps - lam, lo)
        b = np.minimum(ps + lam, hi)
        keep = a < b
        ps, a, b = ps[keep], a[keep], b[keep]
        if ps.size == 0:
            continue
        targets = np.concatenate([a, b])
        if method == "closed":
            roots = _invert_closed(query, u, v, targets)
        else:
            roots = _invert_bisect(query, u, v, targets, increasing)
        # exact endpoints where the level window is clipped by the range of F
        x_lo, x_hi = (u, v) if increasing else (v, u)
        roots = np.where(targets == lo, x_lo, np.where(targets == hi, x_hi, roots))
        xa, xb = roots[: ps.size], roots[ps.size:]
        left, right = np.minimum(xa, xb), np.maximum(xa, xb)
        for p, l, r in zip(ps.tolist(), left.tolist(), right.tolist()):
            per_p[p] = per_p.get(p, 0.0) + (r - l)
            intervals.append((l, r))
    intervals.sort()
    merged: list[tuple[float, float]] = []
    for l, r in intervals:
        if merged and l <= merged[-1][1] + 1e-15:
            merged[-1] = (merged[-1][0], max(r, merged[-1][1]))
        else:
            merged.append((l, r))
    return MeasureReport(total=math.fsum(per_p.values()), per_p=per_p, intervals=merged)


# --------------------------------------------------------------------------
# the sum over frequency pairs
# --------------------------------------------------------------------------


class PropSum(NamedTuple):
    sum: float
    bound_ratio: float
    bound: float


def prop_bound(J: int, lam: float) -> float:
    """lam J^2 + lam^(1/2) J^(1/2) log J, with log J floored at 1."""
    return lam * J * J + math.sqrt(lam * J) * max(math.log(J), 1.0)


def half_pairs(J: int) -> np.ndarray:
    """One representative of each {(j1, j2), (-j1, -j2)} in [-J, J]^2 minus the origin."""
    j1, j2 = np.meshgrid(np.arange(-J, J + 1), np.arange(-J, J + 1), indexing="ij")
    j1, j2 = j1.ravel(), j2.ravel()
    keep = (j2 > 0) | ((j2 == 0) & (j1 > 0))
    return np.stack([j1[keep], j2[keep]], axis=1)


def _quadratic_pair_measures(planar: PlanarCurve, pairs: np.ndarray, lam: float) -> float:
    """Sum of measures over pairs with j2 != 0 for quadratic f, fully vectorized."""
    a0, a1, a2 = (float(c) for c in planar.poly.coeffs)
    xi, eta = planar.interval
    j1 = pairs[:, 0].astype(float)
    j2 = pairs[:, 1].astype(float)
    flip = np.where(j2 * a2 < 0, -1.0, 1.0)
    j1, j2 = j1 * flip, j2 * flip
    A = j2 * a2
    B = j1 + j2 * a1
    xv = -B / (2 * A)
    Fv = j2 * a0 - B * B / (4 * A)
    # right branch t = x - xv on [max(0, xi - xv), eta - xv]; left branch t = xv - x
    ta = np.concatenate([np.maximum(0.0, xi - xv), np.maximum(0.0, xv - eta)])
    tb = np.concatenate([eta - xv, xv - xi])
    A2 = np.concatenate([A, A])
    F2 = np.concatenate([Fv, Fv])
    ok = tb > ta
    ta, tb, A2, F2 = ta[ok], tb[ok], A2[ok], F2[ok]
    Fa = A2 * ta * ta + F2
    Fb = A2 * tb * tb + F2
    pmin = np.floor(Fa - lam) + 1
    npts = (np.ceil(Fb + lam) - pmin).astype(np.int64)
    npts = np.maximum(npts, 0)
    sums = []
    start = 0
    csum = np.cumsum(npts)
    while start < ta.size:
        base = csum[start - 1] if start else 0
        stop = int(np.searchsorted(csum, base + _LEVELS_PER_CHUNK, side="right"))
        stop = max(stop, start + 1)
        sl = slice(start, stop)
        n = npts[sl]
        idx = np.repeat(np.arange(n.size), n)
        offs = np.arange(idx.size) - np.repeat(np.cumsum(n) - n, n)
        p = pmin[sl][idx] + offs
        Ai, Fi, tai, tbi = A2[sl][idx], F2[sl][idx], ta[sl][idx], tb[sl][idx]
        r_hi = np.sqrt(np.maximum(p + lam - Fi, 0.0) / Ai)
        r_lo = np.sqrt(np.maximum(p - lam - Fi, 0.0) / Ai)
        seg = np.clip(r_hi, tai, tbi) - np.clip(r_lo, tai, tbi)
        sums.append(math.fsum(np.bincount(idx, weights=seg, minlength=n.size)))
        start = stop
    return math.fsum(sums)


def prop_sum(planar: PlanarCurve, J: int, lam: float, method: str = "auto", workers: int = 1) -> PropSum:
    """Sum of |mu(j1, j2, lam)| over (j1, j2) in [-J, J]^2 minus the origin."""
    if J < 2:
        raise ValueError("J must be >= 2")
    if not 0 < lam < 0.5:
        raise ValueError("lambda must lie in (0, 1/2)")
    pairs = half_pairs(J)
    quadratic = planar.poly is not None and planar.poly.degree == 2
    if method == "auto":
        method = "closed" if quadratic else "bisect"
    dual = dual_curve(planar)
    if method == "closed" and quadratic:
        linear = pairs[pairs[:, 1] == 0]
        half = _quadratic_pair_measures(planar, pairs[pairs[:, 1] != 0], lam)
        half += math.fsum(measure_sublevel(classify(planar, int(a), int(b), lam, dual)).total for a, b in linear)
    else:
        def one(pair):
            return measure_sublevel(classify(planar, int(pair[0]), int(pair[1]), lam, dual), method=method).total

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(one, pairs))
        else:
            parts = [one(pr) for pr in pairs]
        half = math.fsum(parts)
    total = 2.0 * half
    bound = prop_bound(J, lam)
    return PropSum(sum=total, bound_ratio=total / bound, bound=bound)


# --------------------------------------------------------------------------
# per-cell bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CellRow:
    p: int
    measure: float
    case: str
    bound: float  # the scale expression, without implied constant
    explicit_bound: float  # a bound with explicit constants (inf when not applicable)

    @property
    def ratio(self) -> float:
        return self.measure / self.bound if self.bound > 0 else math.inf


def l1_constants(planar: PlanarCurve) -> tuple[float, float]:
    """Explicit range of |F'(x)| / (|j2| |F(x) - F(x0)|)^(1/2) from Taylor's theorem."""
    c1, c2 = planar.c1, planar.c2
    return c1 * math.sqrt(2 / c2), c2 * math.sqrt(2 / c1)


def l1_ratio(query: LevelSetQuery, x):
    if query.theta_class != THETA2:
        raise ValueError("the critical-point ratio needs a THETA2 query")
    x = np.asarray(x, dtype=float)
    return np.abs(query.dF(x)) / np.sqrt(abs(query.j2) * np.abs(query.F(x) - query.F_x0))


def cell_bound_check(query: LevelSetQuery, lam: float | None = None) -> list[CellRow]:
    """Measured |mu(j1, j2, p, lam)| per p next to the bound that applies to that cell.

    Explicit constants come from the sublevel estimate |{|h| < tau}| <= 2 tau / min|h'|
    on a monotone piece (two pieces at most) and 4 (tau / min|h''|)^(1/2), combined
    with the lower constant of ``l1_constants``.  The critical-point bounds rely on
    lam <= 1/8; for larger lam they are reported as inf.
    """
    lam = query.lam if lam is None else lam
    rep = measure_sublevel(query, lam)
    pl = query.planar
    rows = []
    kappa = l1_constants(pl)[0]
    for p, m in sorted(rep.per_p.items()):
        if query.theta_class == THETA1:
            d1 = abs(query.j1) / 2
            rows.append(CellRow(p, m, "theta1", lam / abs(query.j1), 2 * lam / d1))
            continue
        j2 = abs(query.j2)
        small = lam <= 0.125
        if p != query.p0:
            gap = abs(p - query.p0)
            d1 = kappa * math.sqrt(j2 * gap / 3)
            rows.append(CellRow(p, m, "p!=p0", lam * (j2 * gap) ** -0.5,
                                4 * lam / d1 if small else math.inf))
            continue
        nf = abs(query.F_x0 - round(query.F_x0))
        if nf >= 2 * lam:
            d1 = kappa * math.sqrt(j2 * nf / 2)
            rows.append(CellRow(p, m, "p0,far", lam * j2 ** -0.5 * nf ** -0.5,
                                4 * lam / d1 if small else math.inf))
        else:
            rows.append(CellRow(p, m, "p0,near", math.sqrt(lam / j2), 4 * math.sqrt(lam / (j2 * pl.c1))))
    return rows
