"""Special-function checks against independent oracles.

The brute-force oracle is mpmath at 50 digits; scipy.special serves as a
second, fully independent implementation.
"""

import mpmath
import numpy as np
import pytest
from scipy import special

from mwimage.bessel import bessel_jy, hankel1, hankel1_neg, hankel2

mpmath.mp.dps = 50


def oracle_hankel1(n, x):
    return complex(mpmath.besselj(n, x) + 1j * mpmath.bessely(n, x))


def test_hankel1_frozen_reference_at_unity():
    # J_0(1) + i Y_0(1), frozen from the 50-digit oracle
    expected = 0.7651976865579666 + 0.08825696421567696j
    assert hankel1(0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_hankel1_brute_force_oracle_on_log_grid():
    xs = np.logspace(-3, 3, 100)
    for n in (0, 1, 2, 5, 8, 12):
        mine = hankel1(n, xs)
        ref = np.array([oracle_hankel1(n, x) for x in xs])
        rel = np.abs(mine - ref) / np.abs(ref)
        assert rel.max() < 1e-9, f"order {n}: worst {rel.max():.3g}"
        # stated accuracy of the implementation itself
        assert rel.max() < 1e-10


def test_hankel1_cross_checked_against_scipy():
    xs = np.logspace(-3, 3, 400)
    for n in range(13):
        ref = special.hankel1(n, xs)
        rel = np.abs(hankel1(n, xs) - ref) / np.abs(ref)
        assert rel.max() < 1e-9


def test_high_orders_match_scipy():
    xs = np.logspace(-2, 3, 120)
    j, y = bessel_jy(30, xs)
    for n in (17, 22, 30):
        ref = special.hankel1(n, xs)
        rel = np.abs((j[n] + 1j * y[n]) - ref) / np.abs(ref)
        assert rel.max() < 1e-9


def test_order_one_diverges_toward_origin():
    assert abs(hankel1(1, 1e-8)) > 1e7
    assert abs(hankel1(1, 1e-12)) > 1e11


def test_wronskian_identity():
    x = 2.3
    j, y = bessel_jy(6, np.array([x]))
    for n in range(6):
        w = j[n + 1, 0] * y[n, 0] - j[n, 0] * y[n + 1, 0]
        assert abs(w - 2.0 / (np.pi * x)) < 1e-10


def test_hankel1_neg_continuation_identity():
    for n in range(6):
        for x in (0.3, 1.0, 2.7, 14.9, 40.0):
            ref = -((-1.0) ** n) * np.conj(oracle_hankel1(n, x))
            # conj(J + iY) = J - iY = H^(2) for real argument
            assert hankel1_neg(n, x) == pytest.approx(ref, rel=1e-10)


def test_hankel1_neg_equals_signed_hankel2():
    for n in range(6):
        for x in (0.5, 3.1, 22.0):
            assert hankel1_neg(n, x) == -((-1.0) ** n) * hankel2(n, x)


def test_hankel1_neg_modulus_symmetry():
    for n in range(6):
        for x in (0.2, 1.7, 9.0, 120.0):
            assert abs(hankel1_neg(n, x)) == pytest.approx(abs(hankel1(n, x)), rel=1e-13)


def test_vector_input_returns_array():
    out = hankel1(2, np.array([1.0, 2.0, 3.0]))
    assert out.shape == (3,)
    assert out[1] == hankel1(2, 2.0)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        hankel1(0, 0.0)
    with pytest.raises(ValueError):
        hankel1(0, -1.0)
    with pytest.raises(ValueError):
        hankel1(-1, 1.0)
    with pytest.raises(ValueError):
        bessel_jy(2, np.array([1.0, np.nan]))
