"""Selberg majorant and minorant trigonometric polynomials for an arc of R/Z.

For Delta = (alpha, beta) the indicator satisfies, away from the endpoints,

    chi(x) = (beta - alpha) + psi(alpha - x) + psi(x - beta),

with psi the sawtooth x - floor(x) - 1/2.  Vaaler's polynomial V of degree J
obeys |psi - V| <= Fejer_{J+1} / (2(J+1)), which gives

    S^{+-}(x) = (beta - alpha) + V(alpha - x) + V(x - beta)
                +- (Fejer_{J+1}(alpha - x) + Fejer_{J+1}(x - beta)) / (2(J+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SelbergSystem:
    alpha: float
    beta: float
    J: int
    b_plus: np.ndarray  # index j + J for j in [-J, J]
    b_minus: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def coeffs(self, sign: str) -> np.ndarray:
        if sign in ("+", "plus", 1):
            return self.b_plus
        if sign in ("-", "minus", -1):
            return self.b_minus
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")

    def coeff(self, j: int, sign: str) -> complex:
        if abs(j) > self.J:
            return 0j
        return complex(self.coeffs(sign)[j + self.J])

    def __call__(self, x, sign: str = "+"):
        return eval_trig_poly(self, sign, x)


def vaaler_weight(t):
    """pi t (1 - t) cot(pi t) + t on 0 < t < 1."""
    t = np.asarray(t, dtype=float)
    return math.pi * t * (1 - t) / np.tan(math.pi * t) + t


def vaaler_sin_coeffs(J: int) -> np.ndarray:
    """Coefficients c_j (j = 1..J) with V(x) = sum_j c_j sin(2 pi j x)."""
    j = np.arange(1, J + 1)
    return -vaaler_weight(j / (J + 1)) / (math.pi * j)


def vaaler_poly(J: int, x):
    x = np.asarray(x, dtype=float)
    c = vaaler_sin_coeffs(J)
    j = np.arange(1, J + 1)
    return np.sin(2 * math.pi * np.multiply.outer(x, j)) @ c


def fejer(N: int, x):
    """Fejer kernel sum_{|n|<N} (1 - |n|/N) e(nx) = (sin(pi N x) / sin(pi x))^2 / N."""
    x = np.asarray(x, dtype=float)
    s = np.sin(math.pi * x)
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    return np.where(small, float(N), np.sin(math.pi * N * x) ** 2 / (N * safe ** 2))


def selberg_coeffs(alpha: float, beta: float, J: int) -> SelbergSystem:
    if not alpha < beta < alpha + 1:
        raise ValueError(f"need alpha < beta < alpha + 1, got ({alpha}, {beta})")
    if J < 1:
        raise ValueError("J must be a positive integer")
    N = J + 1
    k = np.arange(-J, J + 1)
    ak = np.abs(k)
    # e(jy) coefficient of V: i sgn(j) w(|j|/N) / (2 pi |j|)
    v = np.zeros(2 * J + 1, dtype=complex)
    nz = k != 0
    v[nz] = 1j * np.sign(k[nz]) * vaaler_weight(ak[nz] / N) / (2 * math.pi * ak[nz])
    ea = np.exp(-2j * math.pi * k * alpha)
    eb = np.exp(-2j * math.pi * k * beta)
    # V(alpha - x) contributes v_{-k} e(-k alpha); V(x - beta) contributes v_k e(-k beta)
    core = v[::-1] * ea + v * eb
    fej = (1 - ak / N) * (ea + eb) / (2 * N)
    b_plus = core + fej
    b_minus = core - fej
    b_plus[J] = (beta - alpha) + 1 / N
    b_minus[J] = (beta - alpha) - 1 / N
    return SelbergSystem(alpha=alpha, beta=beta, J=J, b_plus=b_plus, b_minus=b_minus)


def selberg_for_delta(delta: float) -> SelbergSystem:
    """The choice alpha = -delta, beta = delta, J = floor(1/delta) used for counting."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    return selberg_coeffs(-delta, delta, math.floor(1 / delta))


def eval_trig_poly(system: SelbergSystem, sign: str, x, check: bool = True):
    """Real value of sum_{|j|<=J} b_j e(jx)."""
    x = np.asarray(x, dtype=float)
    b = system.coeffs(sign)
    vals = np.exp(2j * math.pi * np.multiply.outer(x, system.frequencies)) @ b
    if check:
        scale = float(np.sum(np.abs(b)))
        if np.any(np.abs(vals.imag) > 1e-12 * max(1.0, scale)):
            raise ArithmeticError("trigonometric polynomial is not real")
    out = vals.real
    return out if out.ndim else float(out)


def indicator(system: SelbergSystem, x):
    """chi of the open arc (alpha, beta) on R/Z."""
    x = np.asarray(x, dtype=float)
    return (np.mod(x - system.alpha, 1.0) > 0) & (np.mod(x - system.alpha, 1.0) < system.beta - system.alpha)


def coefficient_bound(system: SelbergSystem) -> np.ndarray:
    """1/(J+1) + min(beta - alpha, 1/(pi |j|)) for each j != 0 (inf at j = 0)."""
    k = system.frequencies.astype(float)
    with np.errstate(divide="ignore"):
        bound = 1 / (system.J + 1) + np.minimum(system.beta - system.alpha, 1 / (math.pi * np.abs(k)))
    bound[system.J] = np.inf
    return bound
