from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavemap_spectrum.polynomial import Polynomial, is_zero, poly

fractions = st.fractions(min_value=-10, max_value=10, max_denominator=50)
polys = st.lists(fractions, min_size=1, max_size=6).map(poly)


@given(polys, polys, fractions)
def test_ring_operations_are_exact(p, q, x):
    assert (p + q)(x) == p(x) + q(x)
    assert (p * q)(x) == p(x) * q(x)
    assert (p - q)(x) == p(x) - q(x)


@given(polys, fractions, fractions)
def test_shift_matches_evaluation(p, x0, t):
    assert p.shift(x0)(t) == p(x0 + t)


@given(polys)
def test_derivative_product_rule(p):
    x = Polynomial.identity()
    assert (x * p).derivative().coeffs == (p + x * p.derivative()).coeffs


def test_degree_and_stripping():
    assert poly([1, 2, 0, 0]).degree == 1
    assert poly([0]).degree == -1
    assert poly([0, 0, 3]).valuation() == 2
    assert (Polynomial.identity() ** 3).coeffs == (0, 0, 0, 1)


def test_lower_and_powers():
    x = Polynomial.identity()
    p = x * x * (1 + x)
    assert p.lower(2).coeffs == (1, 1)
    with pytest.raises(ValueError):
        x ** -1
    with pytest.raises(ValueError):
        poly([0]).valuation()


def test_roots():
    x = Polynomial.identity()
    r = np.sort((x * x - 1).roots().real)
    assert np.allclose(r, [-1, 1])
    assert len(Polynomial.const(3).roots()) == 0


def test_is_zero():
    assert is_zero(Fraction(0))
    assert not is_zero(Fraction(1, 10**30))
    assert is_zero(1e-20, 1.0, 1e-13)
