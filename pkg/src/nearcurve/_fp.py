"""Error-free transformations and compensated polynomial evaluation (vectorized)."""

from __future__ import annotations

import numpy as np

UNIT_ROUNDOFF = 2.0 ** -53
_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    z = s - a
    e = (a - (s - z)) + (b - z)
    return s, e


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def comp_horner(coeffs, x):
    """Compensated Horner scheme.

    ``coeffs`` are float coefficients in ascending order.  Returns ``(hi, lo)``
    with ``hi + lo`` accurate to roughly twice working precision.
    """
    x = np.asarray(x, dtype=float)
    n = len(coeffs) - 1
    s = np.full_like(x, coeffs[n])
    c = np.zeros_like(x)
    for i in range(n - 1, -1, -1):
        p, pi = two_prod(s, x)
        s, sigma = two_sum(p, coeffs[i])
        c = c * x + (pi + sigma)
    return s, c


def dist_to_int(hi, lo=0.0):
    """Distance to the nearest integer of the unevaluated sum ``hi + lo``."""
    t = (hi - np.rint(hi)) + lo
    return np.abs(t - np.rint(t))
