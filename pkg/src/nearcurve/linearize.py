"""Block decomposition a = q0 s + a0 and the linearized counts B(q, delta, s).

On each block the curve is replaced by its tangent line at the anchor
x_s = q0 s / q; with q0 = floor(sqrt(delta q / (2 c4))) the Taylor remainder
is at most delta/4, which yields

    B2(q, delta/2) <= A(q, delta) <= B1(q, 3 delta/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _fp
from .counting import CountResult, count_near, guard_band
from .curves import MongeCurve3, RationalPoly

SIDES = ("nominal", "lo", "hi")
_CELLS = 2 ** 20


class DegenerateBlocksError(ValueError):
    pass


@dataclass(frozen=True)
class BlockParams:
    q0: int
    r: int
    valid: bool


def block_params(q: int, delta: float, c4: float) -> BlockParams:
    v = delta * q / (2.0 * c4)
    q0 = math.isqrt(math.floor(v)) if v >= 1 else 0
    if q0 == 0:
        return BlockParams(q0=0, r=0, valid=False)
    return BlockParams(q0=q0, r=q // q0, valid=True)


def _params(curve, q, delta, q0):
    if curve.domain != (0.0, 1.0):
        raise DegenerateBlocksError("block decomposition needs the full domain [0, 1]")
    if q0 is None:
        bp = block_params(q, delta, curve.c4)
    else:
        bp = BlockParams(q0=q0, r=q // q0, valid=q0 >= 1) if q0 >= 1 else BlockParams(0, 0, False)
    if not bp.valid:
        raise DegenerateBlocksError(f"q0 = 0 for q={q}, delta={delta}, c4={curve.c4}")
    return bp


def _anchor_terms(component, q, x):
    """Fractional part of q f(x) (compensated) and the slope f'(x) at anchors x."""
    if isinstance(component, RationalPoly):
        s, c = component.comp_eval(x)
        h, l = _fp.two_prod(float(q), s)
        l = l + q * c
        base = (h - np.rint(h)) + l
    else:
        v = q * np.asarray(component(x, 0), dtype=float)
        base = v - np.rint(v)
    return base, np.asarray(component(x, 1), dtype=float)


def _threshold(delta, q, side):
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    band = guard_band(q)
    return {"nominal": delta, "lo": delta - band, "hi": delta + band}[side]


def block_counts(curve: MongeCurve3, q: int, delta: float, s_values, q0: int, side: str = "nominal"):
    """B(q, delta, s) for each s in ``s_values`` (array)."""
    thr = _threshold(delta, q, side)
    s_values = np.asarray(s_values, dtype=np.int64)
    out = np.empty(s_values.size, dtype=np.int64)
    a0 = np.arange(q0, dtype=float)
    step = max(1, _CELLS // q0)
    for k in range(0, s_values.size, step):
        s = s_values[k:k + step]
        x = (q0 * s).astype(float) / q
        worst = np.zeros((s.size, q0))
        for comp in (curve.f1, curve.f2):
            base, slope = _anchor_terms(comp, q, x)
            frac_slope = slope - np.rint(slope)
            worst = np.maximum(worst, _fp.dist_to_int(base[:, None] + a0[None, :] * frac_slope[:, None]))
        out[k:k + step] = np.count_nonzero(worst < thr, axis=1)
    return out


def count_block(curve: MongeCurve3, q: int, delta: float, s: int, q0: int | None = None,
                side: str = "nominal") -> int:
    """#{a0 in [0, q0): ||q f_i(x_s) + a0 f_i'(x_s)|| < delta, i = 1, 2}, x_s = q0 s / q."""
    bp = _params(curve, q, delta, q0)
    if not 0 <= s <= bp.r:
        raise ValueError(f"s must lie in [0, r={bp.r}], got {s}")
    return int(block_counts(curve, q, delta, [s], bp.q0, side)[0])


class BlockTotals(NamedTuple):
    B1: int
    B2: int


def aggregate(curve: MongeCurve3, q: int, delta: float, q0: int | None = None,
              side: str = "nominal") -> BlockTotals:
    """B1 sums B(q, delta, s) over 0 <= s <= r, B2 over 0 <= s < r."""
    bp = _params(curve, q, delta, q0)
    counts = block_counts(curve, q, delta, np.arange(bp.r + 1), bp.q0, side)
    b1 = int(counts.sum())
    return BlockTotals(B1=b1, B2=b1 - int(counts[-1]))


@dataclass(frozen=True)
class SandwichReport:
    b2_half: int
    a_mid: CountResult
    b1_threehalf: int
    holds: bool
    q0: int
    r: int


def sandwich_check(curve: MongeCurve3, q: int, delta: float, exact: bool | None = None) -> SandwichReport:
    """Evaluate B2(q, delta/2) <= A(q, delta) <= B1(q, 3 delta/2).

    Both B-counts use the block size q0 = q0(delta) of A(q, delta).  B2 is taken
    at the top of its guard band and B1 at the bottom, so ``holds`` certifies
    the inequality despite floating point.
    """
    if not block_params(q, delta / 2, curve.c4).valid:
        raise DegenerateBlocksError(f"q0(delta/2) = 0 for q={q}, delta={delta}")
    bp = _params(curve, q, delta, None)
    a = count_near(curve, q, delta, exact=exact)
    b2 = aggregate(curve, q, delta / 2, q0=bp.q0, side="hi").B2
    b1 = aggregate(curve, q, 1.5 * delta, q0=bp.q0, side="lo").B1
    return SandwichReport(
        b2_half=b2, a_mid=a, b1_threehalf=b1,
        holds=b2 <= a.count_lo and a.count_hi <= b1, q0=bp.q0, r=bp.r,
    )


def taylor_gap(curve: MongeCurve3, q: int, q0: int, s, a0, component: int) -> np.ndarray:
    """| ||q f(a/q)|| - ||q f(x_s) + a0 f'(x_s)|| | with a = q0 s + a0 (float)."""
    f = curve.component(component)
    s = np.asarray(s)
    a0 = np.asarray(a0)
    x = q0 * s / q
    exact_side = _fp.dist_to_int(q * np.asarray(f((q0 * s + a0) / q, 0), dtype=float))
    lin = _fp.dist_to_int(q * np.asarray(f(x, 0), dtype=float) + a0 * np.asarray(f(x, 1), dtype=float))
    return np.abs(exact_side - lin)
