from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearcurve.curves import curve_from_coeffs, generic_cubic, get_planar, planar_from_poly, veronese
from nearcurve.linearize import DegenerateBlocksError, block_params
from nearcurve.planar_sums import (
    MAX_PAIRS,
    composition,
    composition_curvature,
    error_inequalities,
    error_term,
    frequency_pairs,
    lemma3_count,
    lemma4_sum,
    linear_expsum,
)

from .oracles import CUBIC, VERONESE, error_term_loop, expsum_direct, lemma_pairs

X2 = (0, 0, 1)


# --- linear exponential sums --------------------------------------------------


def test_expsum_examples():
    assert linear_expsum(0.0, 7) == 7  # [TRIVIAL]
    assert linear_expsum(0.5, 4) == pytest.approx(0.0, abs=1e-12)  # [TRIVIAL]
    # [DERIVED] direct five-term complex sum
    assert linear_expsum(0.3, 5) == pytest.approx(expsum_direct(0.3, 5), abs=1e-12)
    assert linear_expsum(0.3, 5) == pytest.approx(1.2360679775, abs=1e-9)


def test_expsum_integer_gamma():
    for g in (-3.0, 1.0, 12.0):
        assert linear_expsum(g, 9) == 9


@settings(max_examples=200)
@given(gamma=st.floats(-100, 100), N=st.integers(1, 2000))
def test_expsum_closed_form_and_bound(gamma, N):
    v = linear_expsum(gamma, N)
    assert abs(v - expsum_direct(gamma, N)) < 1e-9
    n = abs(gamma - round(gamma))
    if n > 0:
        assert v <= min(N, 1 / n) + 1e-9


# --- the error term --------------------------------------------------------------


def test_frequency_pairs_count():
    # [TRIVIAL] (2J+1)^2 - 1
    assert len(frequency_pairs(1)) == 8
    assert len(frequency_pairs(5)) == 120
    assert len(frequency_pairs(5, half=True)) == 60


def test_error_term_matches_loop_oracle():
    # [DERIVED] plain double loop
    q, delta = 10 ** 4, 0.2
    bp = block_params(q, delta, 6)
    assert error_term(veronese(), q, delta) == pytest.approx(error_term_loop(VERONESE, q, delta, bp.q0), rel=1e-9)


@pytest.mark.parametrize("q, delta", [(2000, 0.3), (5000, 0.12), (10 ** 4, 0.45)])
def test_error_term_matches_loop_oracle_for_cubic(q, delta):
    bp = block_params(q, delta, generic_cubic().c4)
    got = error_term(generic_cubic(), q, delta)
    assert got == pytest.approx(error_term_loop(CUBIC, q, delta, bp.q0), rel=1e-9)
    assert got >= 0


def test_error_term_explicit_block_size():
    q, delta = 10 ** 4, 0.2
    assert error_term(veronese(), q, delta, q0=7) == pytest.approx(error_term_loop(VERONESE, q, delta, 7), rel=1e-9)


def test_error_term_caps_each_term_at_q0():
    # every term is at most q0, so E <= 9 delta^2 (r + 1) ((2J+1)^2 - 1) q0
    q, delta = 10 ** 5, 0.1
    bp = block_params(q, delta, 6)
    J = math.floor(1 / delta)
    cap = 9 * delta ** 2 * (bp.r + 1) * ((2 * J + 1) ** 2 - 1) * bp.q0
    assert 0 <= error_term(veronese(), q, delta) <= cap


def test_error_term_degenerate_blocks():
    with pytest.raises(DegenerateBlocksError):
        error_term(veronese(), 100, 0.01)


@pytest.mark.parametrize("curve", [veronese(), generic_cubic()])
@pytest.mark.parametrize("q, delta", [(10 ** 3, 0.4), (10 ** 4, 0.2), (10 ** 5, 0.1), (10 ** 5, 0.05)])
def test_error_inequalities(curve, q, delta):
    rep = error_inequalities(curve, q, delta)
    assert rep.upper_holds and rep.lower_holds


# --- dual composition ---------------------------------------------------------------


def test_composition_curvature_identity():
    # f = f2' o (f1')^-1; compare f'' by finite differences with the determinant formula
    c = veronese()
    beta = np.linspace(0.2, 1.8, 81)  # f1'(x) = 2x for x in [0.1, 0.9]
    h = 1e-4
    fd = (composition(c, beta + h) - 2 * composition(c, beta) + composition(c, beta - h)) / h ** 2
    x = beta / 2
    assert np.max(np.abs(fd - composition_curvature(c, x))) < 1e-6
    # f = 3 (beta/2)^2, f'' = 3/2 = 12 / 2^3
    assert np.allclose(composition_curvature(c, x), 1.5)


def test_composition_curvature_cubic():
    c = generic_cubic()
    xs = np.linspace(0.1, 0.9, 41)
    beta = c.f1(xs, 1)
    h = 1e-4
    fd = (composition(c, beta + h) - 2 * composition(c, beta) + composition(c, beta - h)) / h ** 2
    assert np.max(np.abs(fd - composition_curvature(c, xs))) < 1e-6


# --- rational points near planar curves ----------------------------------------------


def test_lemma3_example_matches_double_loop():
    # [DERIVED] exhaustive enumeration of 10 <= u < 20, u <= t <= 2u
    pairs = lemma_pairs(X2, (1, 2), 10)
    expected = sum(1 for _, _, n in pairs if n < Fraction(0.1))
    rep = lemma3_count(get_planar("x2"), (1, 2), 0.1, 10)
    assert rep.count_or_sum == expected
    assert rep.pairs == len(pairs)
    assert rep.bound == pytest.approx(0.1 ** 0.9 * 100 + 10 * math.log(20))
    assert rep.ratio == pytest.approx(expected / rep.bound)


def test_lemma4_example_matches_double_loop():
    # [DERIVED]
    pairs = lemma_pairs(X2, (1, 2), 10)
    terms = [float(n) ** -0.5 for _, _, n in pairs if n >= Fraction(0.1)]
    rep = lemma4_sum(get_planar("x2"), (1, 2), 0.1, 0.5, 10)
    assert rep.count_or_sum == pytest.approx(math.fsum(terms), rel=1e-12)
    assert rep.bound == pytest.approx(100 + 0.1 ** -0.5 * 10 * math.log(20))
    # [TRIVIAL] each summand is at most delta^-Lambda
    assert rep.count_or_sum <= len(terms) * 0.1 ** -0.5 + 1e-9


def test_lemma3_single_u():
    # [TRIVIAL] U = 1: only u = 1, and ||t^2|| = 0 for every integer t
    rep = lemma3_count(get_planar("x2"), (1, 2), 0.2499, 1)
    assert rep.count_or_sum == 2


def test_lemma4_small_exponent_tends_to_count():
    # [TRIVIAL] x^-0 = 1
    pairs = lemma_pairs(X2, (1, 2), 12)
    n = sum(1 for _, _, v in pairs if v >= Fraction(0.05))
    rep = lemma4_sum(get_planar("x2"), (1, 2), 0.05, 1e-9, 12)
    assert rep.count_or_sum == pytest.approx(n, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(U=st.integers(1, 30), d1=st.floats(0.001, 0.249), d2=st.floats(0.001, 0.249))
def test_lemma3_monotone_in_delta(U, d1, d2):
    lo, hi = sorted((d1, d2))
    phi = get_planar("x2_x3")
    assert lemma3_count(phi, (0.5, 1.5), lo, U).count_or_sum <= lemma3_count(phi, (0.5, 1.5), hi, U).count_or_sum


@settings(max_examples=20, deadline=None)
@given(U=st.integers(1, 25), delta=st.floats(0.001, 0.249))
def test_lemma_sums_against_oracle_for_cubic_phi(U, delta):
    phi_c = (0, 0, Fraction(1, 2), Fraction(1, 10))
    phi = get_planar("x2_x3")
    pairs = lemma_pairs(phi_c, (Fraction(1, 3), 2), U)
    d = Fraction(delta)
    assert lemma3_count(phi, (Fraction(1, 3), 2), delta, U).count_or_sum == sum(1 for *_, n in pairs if n < d)
    expected = math.fsum(float(n) ** -0.5 for *_, n in pairs if n >= d)
    assert lemma4_sum(phi, (Fraction(1, 3), 2), delta, 0.5, U).count_or_sum == pytest.approx(expected, rel=1e-12)


def test_lemma_float_path_for_non_polynomial_phi():
    from nearcurve.curves import PlanarCurve

    pl = PlanarCurve(f=np.exp, df=np.exp, d2f=np.exp, interval=(0.0, 1.0), c1=1.0, c2=math.e, M=1 + math.e)
    rep = lemma3_count(pl, (0, 1), 0.1, 20)
    expected = 0
    for u in range(20, 40):
        for t in range(0, u + 1):
            v = u * math.exp(t / u)
            expected += abs(v - round(v)) < 0.1
    assert rep.count_or_sum == expected


def test_lemma_argument_checks():
    phi = get_planar("x2")
    with pytest.raises(ValueError):
        lemma3_count(phi, (1, 2), 0.3, 10)
    with pytest.raises(ValueError):
        lemma3_count(phi, (1, 2), 0.1, 0.5)
    with pytest.raises(ValueError):
        lemma4_sum(phi, (1, 2), 0.1, 1.0, 10)
    with pytest.raises(ValueError):
        lemma4_sum(phi, (1, 2), 0.1, 0.5, 10 ** 6)  # exceeds MAX_PAIRS
    assert MAX_PAIRS == 10 ** 8


def test_large_integer_path_matches_small():
    # coefficients large enough to force the object-dtype residue path
    phi = planar_from_poly((0, 0, Fraction(10 ** 12 + 1, 3)), name="big")
    rep = lemma3_count(phi, (1, 2), 0.1, 40)
    pairs = lemma_pairs((0, 0, Fraction(10 ** 12 + 1, 3)), (1, 2), 40)
    assert rep.count_or_sum == sum(1 for *_, n in pairs if n < Fraction(0.1))


def test_lemma_ratio_grid_bounded():
    # per-U supremum over delta of the ratio varies by at most 5x across U
    phi = get_planar("x2")
    deltas = [2.0 ** -k for k in range(3, 9)] + [0.2499]
    for fn in (lambda d, U: lemma3_count(phi, (1, 2), d, U), lambda d, U: lemma4_sum(phi, (1, 2), d, 0.5, U)):
        sup = [max(fn(d, U).ratio for d in deltas) for U in (8, 16, 32, 64, 128)]
        assert max(sup) / min(sup) <= 5


def test_subinterval_curve_error_term_rejected():
    c = curve_from_coeffs("sub", [0, 0, 1], [0, 0, 0, 1], domain=(0.0, 0.5))
    with pytest.raises(DegenerateBlocksError):
        error_term(c, 10 ** 4, 0.2)
