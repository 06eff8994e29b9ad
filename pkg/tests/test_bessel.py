import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import jn_zeros, jv

from wedgeheat.bessel import bessel_zeros, bessel_zeros_below, mcmahon_zero

import oracles


def bisect_zero(nu, a, b, steps=80):
    f = lambda x: mpmath.besselj(nu, x)
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    assert f(a) * f(b) < 0
    for _ in range(steps):
        mid = (a + b) / 2
        if f(a) * f(mid) <= 0:
            b = mid
        else:
            a = mid
    return float((a + b) / 2)


def test_first_zeros_against_bisection():
    j0 = bessel_zeros(0, 1)[0]
    j1 = bessel_zeros(1, 1)[0]
    assert abs(j0 - bisect_zero(0, 2, 3)) <= 1e-10
    assert abs(j1 - bisect_zero(1, 3, 4)) <= 1e-10
    assert j0 == pytest.approx(oracles.J0_1, abs=1e-14)
    assert j1 == pytest.approx(oracles.J1_1, abs=1e-14)


def test_mcmahon_large_n():
    z = bessel_zeros(1, 50)
    assert z[-1] == pytest.approx(oracles.J1_50, abs=1e-12)
    assert abs(z[-1] - mcmahon_zero(1, 50)) < 1e-9
    # leading residual is -(4 nu^2 - 1) / (8 beta): 2.4e-3 at n = 50, below 1e-3 from n ~ 120
    beta = (50 + 0.5 - 0.25) * math.pi
    assert z[-1] - beta == pytest.approx(-3 / (8 * beta), rel=1e-4)
    z = bessel_zeros(1, 150)
    assert abs(z[-1] - (150 + 0.5 - 0.25) * math.pi) < 1e-3


@pytest.mark.parametrize("nu", [0, 1, 2, 5, 17, 60])
def test_integer_orders_match_scipy(nu):
    np.testing.assert_allclose(bessel_zeros(nu, 30), jn_zeros(nu, 30), rtol=1e-13)


@pytest.mark.parametrize("nu", [0.5, 1.5, math.sqrt(2.0), 7.3, 103.25])
def test_non_integer_orders(nu):
    z = bessel_zeros(nu, 6)
    for k, x in enumerate(z[:3]):
        ref = float(mpmath.besseljzero(mpmath.mpf(nu), k + 1))
        assert x == pytest.approx(ref, rel=1e-13)
    assert np.all(np.abs(jv(nu, z)) < 1e-12)


def test_half_order_closed_form():
    # J_{1/2} is proportional to sin(x)/sqrt(x)
    np.testing.assert_allclose(bessel_zeros(0.5, 20), np.pi * np.arange(1, 21), rtol=1e-14)


@given(st.floats(0.0, 40.0), st.integers(1, 20))
def test_interlacing(nu, n):
    a = bessel_zeros(nu, n + 1)
    b = bessel_zeros(nu + 1, n)
    assert nu < a[0]
    assert np.all(a[:-1] < b) and np.all(b < a[1:])


@given(st.floats(0.0, 30.0), st.floats(1.0, 120.0))
def test_zeros_below_is_complete(nu, xmax):
    z = bessel_zeros_below(nu, xmax)
    assert np.all(z <= xmax) and np.all(np.diff(z) > 0)
    more = bessel_zeros(nu, z.size + 1)
    np.testing.assert_allclose(more[:z.size], z, rtol=1e-14)
    assert more[-1] > xmax


def test_invalid_arguments():
    with pytest.raises(ValueError):
        bessel_zeros(-1.0, 3)
    with pytest.raises(ValueError):
        bessel_zeros(1.0, 0)
    assert bessel_zeros_below(10.0, 5.0).size == 0
