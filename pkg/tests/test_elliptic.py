"""Tests for engine.elliptic — sn, cn, dn by AGM/Landen and the quarter period K."""

import math

import numpy as np
import pytest
from scipy import special

from engine.elliptic import EllipticModulus, agm, cn, complete_K, dn, ellipj, sn
from engine.errors import NonFiniteError, ParameterError

MODULI = [0.1, 0.3, 0.5, 0.7, 0.9]


@pytest.fixture(scope="module")
def points():
    return np.linspace(-10.0, 10.0, 1000)


# ---------------------------------------------------------------------------
# Quarter period
# ---------------------------------------------------------------------------

class TestCompleteK:

    def test_k_zero(self):
        assert complete_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_k_half(self):
        assert complete_K(0.5) == pytest.approx(1.6857503548125961, abs=1e-14)

    @pytest.mark.parametrize("k", MODULI)
    def test_matches_scipy(self, k):
        assert complete_K(k) == pytest.approx(special.ellipk(k * k), rel=1e-14)

    def test_increasing_in_k(self):
        values = [complete_K(k) for k in np.linspace(0.0, 0.99, 50)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_agm(self):
        assert agm(1.0, 1.0) == 1.0
        assert agm(24.0, 6.0) == pytest.approx(13.458171481725615, rel=1e-14)


# ---------------------------------------------------------------------------
# sn, cn, dn
# ---------------------------------------------------------------------------

class TestEllipj:

    @pytest.mark.parametrize("k", MODULI)
    def test_matches_scipy(self, k, points):
        ours = ellipj(points, k)
        theirs = special.ellipj(points, k * k)[:3]
        for a, b in zip(ours, theirs):
            assert np.max(np.abs(a - b)) <= 1e-12

    @pytest.mark.parametrize("k", MODULI)
    def test_identities(self, k, points):
        s, c, d = ellipj(points, k)
        assert np.max(np.abs(s ** 2 + c ** 2 - 1.0)) <= 1e-12
        assert np.max(np.abs(d ** 2 + k * k * s ** 2 - 1.0)) <= 1e-12

    @pytest.mark.parametrize("k", MODULI)
    def test_derivatives(self, k):
        t = np.linspace(-5.0, 5.0, 101)
        step = 1e-5
        s, c, d = ellipj(t, k)
        plus = ellipj(t + step, k)
        minus = ellipj(t - step, k)
        dsn, dcn, ddn = ((a - b) / (2 * step) for a, b in zip(plus, minus))
        assert np.max(np.abs(dsn - c * d)) <= 1e-7
        assert np.max(np.abs(dcn + s * d)) <= 1e-7
        assert np.max(np.abs(ddn + k * k * s * c)) <= 1e-7

    @pytest.mark.parametrize("k", MODULI)
    def test_periods(self, k):
        t = np.linspace(0.0, 5.0, 51)
        quarter = complete_K(k)
        s, c, d = ellipj(t, k)
        s4, c4, _ = ellipj(t + 4 * quarter, k)
        _, _, d2 = ellipj(t + 2 * quarter, k)
        assert np.max(np.abs(s4 - s)) <= 1e-12
        assert np.max(np.abs(c4 - c)) <= 1e-12
        assert np.max(np.abs(d2 - d)) <= 1e-12

    def test_quarter_period_values(self):
        s, c, d = ellipj(complete_K(0.5), 0.5)
        assert s == pytest.approx(1.0, abs=1e-12)
        assert c == pytest.approx(0.0, abs=1e-8)
        assert d == pytest.approx(math.sqrt(0.75), abs=1e-12)

    def test_origin(self):
        assert ellipj(0.0, 0.5) == (0.0, 1.0, 1.0)

    def test_k_zero_is_circular(self, points):
        s, c, d = ellipj(points, 0.0)
        assert np.array_equal(s, np.sin(points))
        assert np.array_equal(c, np.cos(points))
        assert np.all(d == 1.0)

    def test_scalar_in_scalar_out(self):
        result = ellipj(1.0, 0.5)
        assert all(isinstance(v, float) for v in result)

    def test_shape_is_kept(self):
        t = np.zeros((3, 2))
        assert all(v.shape == (3, 2) for v in ellipj(t, 0.5))

    def test_single_function_helpers(self):
        s, c, d = ellipj(2.0, 0.3)
        assert (sn(2.0, 0.3), cn(2.0, 0.3), dn(2.0, 0.3)) == (s, c, d)

    def test_odd_and_even(self):
        t = np.linspace(0.1, 4.0, 20)
        s, c, d = ellipj(t, 0.6)
        sm, cm, dm = ellipj(-t, 0.6)
        assert np.allclose(sm, -s, atol=1e-14)
        assert np.allclose(cm, c, atol=1e-14)
        assert np.allclose(dm, d, atol=1e-14)


# ---------------------------------------------------------------------------
# Argument checks
# ---------------------------------------------------------------------------

class TestModulus:

    @pytest.mark.parametrize("k", [1.0, 1.5, -0.1, float('nan'), float('inf')])
    def test_out_of_range(self, k):
        with pytest.raises(ParameterError):
            ellipj(1.0, k)

    def test_out_of_range_quarter_period(self):
        with pytest.raises(ParameterError):
            complete_K(1.0)

    def test_non_finite_argument(self):
        with pytest.raises(NonFiniteError):
            ellipj([0.0, float('nan')], 0.5)

    def test_modulus_object(self):
        m = EllipticModulus(0.6)
        assert m.complementary == pytest.approx(0.8)
        assert ellipj(1.0, m) == ellipj(1.0, 0.6)

    def test_modulus_object_validates(self):
        with pytest.raises(ParameterError):
            EllipticModulus(1.2)
