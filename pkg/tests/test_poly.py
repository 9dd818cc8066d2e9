from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from sectionhyp.errors import DomainError
from sectionhyp.poly import Poly

small_fracs = st.fractions(min_value=-20, max_value=20, max_denominator=50)
pos_fracs = st.fractions(min_value=Fraction(1, 50), max_value=50, max_denominator=50)


def test_trailing_zeros_are_trimmed():
    p = Poly.exact([1, 2, 0, 0])
    assert p.degree == 1 and p.coeffs == (1, 2)
    assert Poly.exact([0, 0]).is_zero


def test_exact_evaluation_stays_rational():
    p = Poly.exact([1, Fraction(1, 2), Fraction(1, 3)])
    assert p(Fraction(3)) == Fraction(1) + Fraction(3, 2) + 3


def test_from_roots_matches_expansion():
    p = Poly.from_roots([-1, -2])
    assert p.coeffs == (2, 3, 1)


def test_reverse_rejects_zero_polynomial():
    with pytest.raises(DomainError):
        Poly.exact([]).reverse()


def test_scale_var_rejects_zero():
    with pytest.raises(DomainError):
        Poly.exact([1, 1]).scale_var(0)


def test_ratios_need_positive_coefficients():
    with pytest.raises(DomainError):
        Poly.exact([1, -1, 1]).consecutive_ratios()


def test_section_and_shift():
    p = Poly.exact([1, 2, 3, 4])
    assert p.section(1).coeffs == (1, 2)
    assert p.shift_up(2).coeffs == (0, 0, 1, 2, 3, 4)


def test_json_round_trip_exact_and_float():
    p = Poly.exact([1, Fraction(-7, 3), 5])
    assert Poly.from_json(p.to_json()) == p
    f = Poly.floating(["0.1", "2.5", "1e-30"], 128)
    back = Poly.from_json(f.to_json())
    assert back.bits == 128 and back.coeffs == f.coeffs


def test_mixed_modes_refuse_arithmetic():
    with pytest.raises((DomainError, TypeError, ValueError)):
        Poly.exact([1, 1]) + Poly.floating([1, 1], 64)


@given(st.lists(small_fracs, min_size=1, max_size=10).filter(lambda c: c[0] != 0 and c[-1] != 0))
def test_reverse_is_an_involution(coeffs):
    p = Poly.exact(coeffs)
    assert p.reverse().reverse() == p


@given(st.lists(pos_fracs, min_size=3, max_size=10), pos_fracs)
def test_scaling_keeps_each_ratio(coeffs, c):
    p = Poly.exact(coeffs)
    assert p.scale_var(c).consecutive_ratios() == p.consecutive_ratios()


@settings(max_examples=40, deadline=None)
@given(st.lists(small_fracs, min_size=2, max_size=11), st.fractions(min_value=-2, max_value=0, max_denominator=64))
def test_derivative_matches_central_difference(coeffs, x):
    bits = 192
    p = Poly.floating([Fraction(c) for c in coeffs], bits)
    with mpmath.workprec(bits):
        h = mpmath.mpf(2) ** (-bits // 3)
        xm = mpmath.mpf(x.numerator) / x.denominator
        fd = (p(xm + h) - p(xm - h)) / (2 * h)
        scale = 1 + sum(abs(mpmath.mpf(c)) * 3 ** i for i, c in enumerate(p.coeffs))
        assert abs(p.derivative()(xm) - fd) <= 1000 * h * h * scale


@given(st.lists(small_fracs, min_size=1, max_size=8), st.integers(min_value=64, max_value=400))
def test_exact_embeds_into_float(coeffs, bits):
    p = Poly.exact(coeffs)
    f = p.to_float(bits)
    with mpmath.workprec(bits):
        for a, b in zip(p.coeffs, f.coeffs):
            exact = mpmath.mpf(a.numerator) / a.denominator if isinstance(a, Fraction) else mpmath.mpf(a)
            assert b == exact
