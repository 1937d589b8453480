from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcfem.polynomials import (
    POSITION,
    X,
    Y,
    Z,
    Poly3,
    PolyVec3,
    curl,
    differentiate,
    div,
    evaluate,
    evaluate_many,
    grad,
    integrate_interval,
    poincare_p,
    poincare_p1,
    poincare_p3,
    substitute,
)

exponents = st.tuples(*(st.integers(0, 3) for _ in range(3)))
coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=7)
polys = st.dictionaries(exponents, coeffs, max_size=6).map(Poly3)
fields = st.tuples(polys, polys, polys).map(PolyVec3)


def test_arithmetic_and_degree():
    p = (X + 2 * Y) * (X - Z) + Fraction(1, 3)
    assert p.degree() == 2
    assert p(1, 1, 1) == Fraction(1, 3)
    assert (X**3).terms == {(3, 0, 0): 1}
    assert (X - X).is_zero()
    with pytest.raises(ValueError):
        Poly3({(-1, 0, 0): 1})


def test_derivatives_of_monomial():
    p = X**2 * Y * Z**3
    assert differentiate(p, 0) == 2 * X * Y * Z**3
    assert differentiate(p, "z") == 3 * X**2 * Y * Z**2
    assert div(POSITION) == Poly3.const(3)
    assert curl(PolyVec3((Y, -X, 0))) == PolyVec3((0, 0, -2))


def test_evaluate_many_matches_exact():
    p = X * Y - Z**2 + Fraction(1, 2)
    pts = np.array([[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]])
    expect = [float(p(*map(Fraction, map(str, q)))) for q in pts]
    assert np.allclose(evaluate_many(p, pts), expect, atol=1e-14)
    assert evaluate(PolyVec3((X, Y, Z)), (1, 2, 3)) == (1, 2, 3)


def test_integrate_and_substitute():
    p = X**2 * Y
    assert integrate_interval(p, 0, -1, 1) == Fraction(2, 3) * Y
    assert substitute(p, {1: 2}) == 2 * X**2


@settings(max_examples=60, deadline=None)
@given(polys)
def test_curl_grad_vanishes(p):
    assert curl(grad(p)) == PolyVec3.zero()


@settings(max_examples=60, deadline=None)
@given(fields)
def test_div_curl_vanishes(v):
    assert div(curl(v)).is_zero()


@settings(max_examples=60, deadline=None)
@given(fields)
def test_homotopy_curl_p_plus_p3_div(w):
    assert curl(poincare_p(w)) + poincare_p3(div(w)) == w


@settings(max_examples=60, deadline=None)
@given(fields)
def test_homotopy_grad_p1_plus_p_curl(v):
    assert grad(poincare_p1(v)) + poincare_p(curl(v)) == v


@settings(max_examples=40, deadline=None)
@given(fields)
def test_poincare_kills_radial_and_is_tangent_free(v):
    pv = poincare_p(v)
    # x . p(v) = 0 identically
    assert (POSITION[0] * pv[0] + POSITION[1] * pv[1] + POSITION[2] * pv[2]).is_zero()
    assert poincare_p(POSITION) == PolyVec3.zero()
