from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from treedense.dyadic import Dyadic

dyadics = st.builds(Dyadic, st.integers(0, 2**20), st.integers(0, 24))


def test_canonical_form():
    assert Dyadic(4, 2) == Dyadic(1, 0)
    assert Dyadic(6, 1) == Dyadic(3, 0)
    assert Dyadic(0, 7).exp == 0
    d = Dyadic(12, 2)
    assert d.num == 3 and d.exp == 0


def test_pow2():
    assert Dyadic.pow2(3) == Dyadic(8)
    assert Dyadic.pow2(-3) == Dyadic(1, 3)
    assert Dyadic.pow2(0) == Dyadic(1)


def test_negative_numerator_rejected():
    with pytest.raises(ValueError):
        Dyadic(-1)


def test_subtraction_guards_negative():
    with pytest.raises(ValueError):
        Dyadic(1, 2) - Dyadic(1, 1)


def test_str_parse_round_trip():
    for d in [Dyadic(0), Dyadic(5, 3), Dyadic(1), Dyadic(7, 0), Dyadic(9, 4)]:
        assert Dyadic.parse(str(d)) == d
    assert str(Dyadic(5, 3)) == "5/2^3"


@given(dyadics, dyadics)
def test_arithmetic_matches_fractions(a, b):
    assert (a + b).as_fraction() == a.as_fraction() + b.as_fraction()
    assert (a * b).as_fraction() == a.as_fraction() * b.as_fraction()
    assert (a < b) == (a.as_fraction() < b.as_fraction())
    assert (a == b) == (a.as_fraction() == b.as_fraction())


@given(dyadics, dyadics)
def test_add_sub_exact(a, b):
    assert (a + b) - b == a


@given(dyadics, st.integers(0, 6))
def test_power_matches_fractions(a, k):
    assert (a**k).as_fraction() == a.as_fraction() ** k


@given(dyadics, st.integers(-10, 10))
def test_scale2(a, e):
    assert a.scale2(e).as_fraction() == a.as_fraction() * Fraction(2) ** e


def test_int_comparisons():
    assert Dyadic(1) == 1
    assert Dyadic(1, 1) < 1
    assert Dyadic(3) > 1
