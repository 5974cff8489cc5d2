import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import hermite as np_hermite

from tasep_lab import numerics as nm

AI0 = 0.3550280538878172


class TestCircle:
    def test_residues(self):
        assert nm.circle_integral(lambda w: 1.0 / w, 0.0, 1.0) == pytest.approx(1.0, abs=1e-13)
        assert nm.circle_integral(lambda w: w**3, 0.0, 1.0) == pytest.approx(0.0, abs=1e-13)
        val = nm.circle_integral(lambda w: np.exp(w) / w**2, 0.0, 1.0)
        assert val.real == pytest.approx(1.0, abs=1e-13)

    @given(
        st.lists(st.integers(min_value=-6, max_value=6), min_size=1, max_size=5, unique=True),
        st.floats(min_value=0.3, max_value=3.0),
    )
    def test_laurent_exactness(self, powers, radius):
        coeffs = {p: 1.0 + 0.5 * p for p in powers}

        def f(w):
            return sum(c * w**p for p, c in coeffs.items())

        val = nm.circle_integral(f, 0.0, radius, n=64)
        assert val.real == pytest.approx(coeffs.get(-1, 0.0), abs=1e-10)
        assert abs(val.imag) < 1e-10

    def test_pole_on_contour_detected(self):
        with pytest.raises(nm.PoleOnContour):
            nm.circle_integral(lambda w: 1.0 / (w - 1.0) / (w - 1.0 + 1e-18), 0.0, 1.0)


class TestRays:
    def test_airy_value(self):
        val, tail = nm.ray_integral(lambda w: np.exp(w**3 / 3.0), offset=0.4)
        assert val.real == pytest.approx(AI0, abs=1e-12)
        assert abs(val.imag) < 1e-12
        assert tail < 1e-10

    def test_truncation_stability(self):
        vals = []
        for R in (8.0, 16.0):
            v, _ = nm.ray_integral(lambda w: np.exp(w**3 / 3.0 - 1.3 * w), offset=0.4, R=R)
            vals.append(v)
        assert abs(vals[0] - vals[1]) < 1e-10

    def test_decay_error(self):
        with pytest.raises(nm.DecayError):
            nm.ray_integral(lambda w: np.exp(0.01 * w), offset=0.0, R=4.0)


class TestHermite:
    def test_low_orders(self):
        assert nm.hermite(0, 1.7) == 1.0
        assert nm.hermite(1, 2.0) == pytest.approx(4.0)

    @given(st.integers(min_value=0, max_value=25), st.floats(min_value=-4, max_value=4))
    def test_against_numpy(self, k, x):
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        ref = np_hermite.hermval(x, coeffs)
        assert nm.hermite(k, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)

    def test_normalization_integral(self):
        # ∫ H_2^2 e^{-x^2} dx = 2! 2^2 sqrt(pi)
        x = np.linspace(-10, 10, 20001)
        val = np.trapezoid(nm.hermite(2, x) ** 2 * np.exp(-(x**2)), x)
        assert val == pytest.approx(2 * 4 * math.sqrt(math.pi), abs=1e-8)

    def test_scaled_route_consistency(self):
        # large degrees reconstruct from the orthonormal recurrence
        for k in (61, 90):
            x = 1.3
            ref = np_hermite.hermval(x, np.eye(k + 1)[k])
            assert nm.hermite(k, x) == pytest.approx(ref, rel=1e-9)

    def test_mehler_formula(self):
        q, x, y = 0.62, 0.8, -0.4
        lhs = math.exp(-((x - q * y) ** 2) / (1 - q * q)) / math.sqrt(math.pi * (1 - q * q))
        rhs = sum(
            nm.hermite(k, x) * nm.hermite(k, y) * q**k / (math.sqrt(math.pi) * 2**k * math.factorial(k))
            for k in range(80)
        ) * math.exp(-x * x)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestAiry:
    def test_against_scipy(self):
        xs = np.concatenate([np.linspace(-25, 9, 171), [12.0, 30.0]])
        mine = nm.airy_ai(xs)
        ref = sp.airy(xs)[0]
        assert np.max(np.abs(mine - ref)) < 5e-12

    def test_series_contour_overlap(self):
        # the two evaluation routes agree where both are valid
        for x in (4.2, 4.9):
            assert nm._airy_series(np.array([x]))[0] == pytest.approx(
                nm._airy_right_contour(np.array([x]))[0], rel=1e-8
            )
        for x in (-7.2, -6.1):
            assert nm._airy_series(np.array([x]))[0] == pytest.approx(
                nm._airy_left_contour(np.array([x]))[0], rel=1e-8, abs=1e-10
            )


class TestFredholmDiscrete:
    def test_zero_kernel(self):
        assert nm.fredholm_det_discrete(np.zeros((7, 7))) == 1.0

    @given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=10**6))
    def test_rank_one(self, n, seed):
        rng = np.random.default_rng(seed)
        f, g = rng.normal(size=n), rng.normal(size=n)
        det = nm.fredholm_det_discrete(np.outer(f, g))
        assert det == pytest.approx(1.0 - float(f @ g), rel=1e-10, abs=1e-10)

    def test_matches_numpy_det(self):
        rng = np.random.default_rng(3)
        a = 0.3 * rng.normal(size=(12, 12))
        assert nm.det_one_minus(a) == pytest.approx(np.linalg.det(np.eye(12) - a), rel=1e-11)

    @given(st.integers(min_value=0, max_value=10**6))
    def test_conjugation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = 8
        a = 0.4 * rng.normal(size=(n, n))
        c = rng.uniform(0.2, 5.0, size=n)
        conj = a * np.outer(1.0 / c, c)
        assert nm.det_one_minus(conj) == pytest.approx(nm.det_one_minus(a), rel=1e-9, abs=1e-12)


class TestFredholmContinuum:
    def test_zero_kernel(self):
        assert nm.fredholm_det_continuum(lambda x, y: np.zeros((len(x), len(y))), [0.0]) == 1.0

    def test_gaussian_rank_one(self):
        # K(x,y) = phi(x) phi(y) with phi the standard normal density slice
        def kern(x, y):
            return np.outer(np.exp(-(x**2) / 2.0), np.exp(-(y**2) / 2.0)) / math.sqrt(2 * math.pi)

        s = 0.7
        det = nm.fredholm_det_continuum(kern, [s], order=80)
        expected = 1.0 - sp.erfc(s) / (2.0 * math.sqrt(2.0))
        assert det == pytest.approx(expected, abs=1e-8)

    def test_window_refinement_stable(self):
        def kern(x, y):
            return np.exp(-np.add.outer(x**2, y**2) / 2.0) / math.sqrt(2 * math.pi)

        d1 = nm.fredholm_det_continuum(kern, [-1.0], order=60)
        d2 = nm.fredholm_det_continuum(kern, [-1.0], order=120)
        assert abs(d1 - d2) < 1e-8
