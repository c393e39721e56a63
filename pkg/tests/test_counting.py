from __future__ import annotations

import math
import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearcurve.counting import CHUNK, ScaledPoly, UnsupportedError, count_near, count_on_curve, guard_band
from nearcurve.curves import curve_from_coeffs, embedded_parabola, generic_cubic, veronese

from .oracles import CUBIC, PARABOLA, VERONESE, brute_count, brute_on_curve, frac_norm, poly_eval


def test_veronese_q10_example():
    # [DERIVED] brute force over a = 0..10 gives a in {0, 1, 10}
    assert brute_count(VERONESE, 10, 0.25) == 3
    r = count_near(veronese(), 10, 0.25)
    assert (r.count_lo, r.count_hi, r.uncertain) == (3, 3, 0)
    assert r.count == 3


def test_endpoints_always_count():
    # [TRIVIAL] a = 0 and a = q give integral coordinates
    for q in (1, 2, 17, 1000):
        assert count_near(veronese(), q, 0.01).count_lo >= 2


def test_parabola_matches_one_dimensional_brute_force():
    # [DERIVED] second component is identically zero, so only ||a^2 / 100|| matters
    expected = sum(1 for a in range(101) if min((a * a) % 100, 100 - (a * a) % 100) < 30)
    assert count_near(embedded_parabola(), 100, 0.3).count == expected


@settings(max_examples=60, deadline=None)
@given(q=st.integers(1, 400), delta=st.floats(0.001, 0.499))
def test_exact_count_matches_fraction_oracle(q, delta):
    for make, polys in ((veronese, VERONESE), (generic_cubic, CUBIC)):
        assert count_near(make(), q, delta).count == brute_count(polys, q, delta)


@settings(max_examples=40, deadline=None)
@given(q=st.integers(1, 3000), delta=st.floats(0.001, 0.499))
def test_float_interval_contains_exact(q, delta):
    c = generic_cubic()
    exact = count_near(c, q, delta, exact=True).count
    f = count_near(c, q, delta, exact=False)
    assert f.count_lo <= exact <= f.count_hi
    assert f.count_hi - f.count_lo == f.uncertain


def test_boundary_values_are_excluded():
    # ||q a^2/q^2|| = ||a^2 / q||; with q = 8, a = 2 gives exactly 1/2, a = 1 gives 1/8
    # delta = 1/8 exactly: strict inequality excludes a = 1 and a = 7 for the first component
    p = embedded_parabola()
    assert count_near(p, 8, 0.125).count == brute_count(PARABOLA, 8, 0.125)
    assert count_near(p, 8, 0.125).count < count_near(p, 8, 0.126).count


def test_float_path_flags_exact_boundary_as_uncertain():
    r = count_near(embedded_parabola(), 8, 0.125, exact=False)
    assert r.uncertain > 0
    assert r.count_lo <= brute_count(PARABOLA, 8, 0.125) <= r.count_hi


@settings(max_examples=30, deadline=None)
@given(q=st.integers(1, 5000), d1=st.floats(0.001, 0.499), d2=st.floats(0.001, 0.499))
def test_monotone_in_delta(q, d1, d2):
    lo, hi = sorted((d1, d2))
    c = veronese()
    a, b = count_near(c, q, lo, exact=False), count_near(c, q, hi, exact=False)
    assert a.count_lo <= b.count_lo and a.count_hi <= b.count_hi
    assert count_near(c, q, lo).count <= count_near(c, q, hi).count


@pytest.mark.parametrize("q", [1, 2, 10, 97, 1000, 3 * CHUNK + 5])
def test_worker_count_does_not_change_result(q):
    c = generic_cubic()
    for exact in (True, False):
        a = count_near(c, q, 0.2, exact=exact, workers=1)
        b = count_near(c, q, 0.2, exact=exact, workers=4)
        assert (a.count_lo, a.count_hi) == (b.count_lo, b.count_hi)


def test_rejects_bad_arguments():
    for q, d in ((0, 0.1), (10, 0.0), (10, 0.5), (10, -0.1), (-3, 0.2)):
        with pytest.raises(ValueError):
            count_near(veronese(), q, d)


def test_exact_path_needs_coefficients():
    c = replace(veronese(), coeff_form=None)
    with pytest.raises(UnsupportedError):
        count_near(c, 10, 0.1, exact=True)
    with pytest.raises(UnsupportedError):
        count_on_curve(c, 10)
    # without coefficients the default is the float path
    r = count_near(c, 10, 0.25)
    assert not r.exact and r.count_lo <= 3 <= r.count_hi


def test_subdomain_restricts_a_range():
    # only a with a/q in [0, 1/2] are counted
    c = curve_from_coeffs("half", [0, 0, 1], [0, 0, 0, 1], domain=(0.0, 0.5))
    q, d = 40, Fraction(0.3)
    expected = sum(
        1 for a in range(q // 2 + 1)
        if all(frac_norm(q * poly_eval(p, Fraction(a, q))) < d for p in VERONESE)
    )
    assert count_near(c, q, 0.3).count == expected
    assert expected < brute_count(VERONESE, q, 0.3)


# --- on-curve points ----------------------------------------------------------


def test_on_curve_q8():
    # [DERIVED] a in {0, 4, 8}
    assert brute_on_curve(VERONESE, 8) == 3
    assert count_on_curve(veronese(), 8) == 3


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 101, 997])
def test_on_curve_prime(p):
    # [TRIVIAL] p | a^2 forces a = 0 or a = p
    assert count_on_curve(veronese(), p) == 2


@pytest.mark.parametrize("k", range(2, 21))
def test_on_curve_cubes(k):
    # [DERIVED] a = k^2 j for j = 0..k lie on the curve
    assert count_on_curve(veronese(), k ** 3) >= k + 1


@settings(max_examples=30, deadline=None)
@given(q=st.integers(1, 300), delta=st.floats(1e-6, 0.499))
def test_near_count_dominates_on_curve(q, delta):
    for make, polys in ((veronese, VERONESE), (generic_cubic, CUBIC)):
        on = count_on_curve(make(), q)
        assert on == brute_on_curve(polys, q)
        assert count_near(make(), q, delta).count_lo >= on


def test_guard_band_scale():
    assert guard_band(10) == pytest.approx(1e-6)
    assert guard_band(10 ** 7) == pytest.approx(1e-2)


def test_large_q_spot_check_against_integer_oracle():
    # exact integer residues for a random sample of a at q = 10^6
    q, delta = 10 ** 6, 0.05
    rng = random.Random(5)
    sample = rng.sample(range(q + 1), 2000)
    den1, den2 = q, q * q
    d = Fraction(delta)

    def ok(a):
        r1, r2 = (a * a) % den1, (a ** 3) % den2
        return min(r1, den1 - r1) < d * den1 and min(r2, den2 - r2) < d * den2

    s1, s2 = (ScaledPoly(p, q) for p in veronese().coeff_form)
    for a in sample:
        assert (s1.norm_lt(a, d) and s2.norm_lt(a, d)) == ok(a)
    r = count_near(veronese(), q, delta)
    assert r.exact and r.uncertain == 0
    assert math.isfinite(r.elapsed)
