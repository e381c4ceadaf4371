import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnet.signals import (
    NoiseKind,
    NoiseSpec,
    QuadratureMean,
    RunningNorm,
    ito_covariance,
    modulus_squared,
    rms_norm,
)


class TestModulusSquared:
    def test_deterministic_complex_number(self):
        assert modulus_squared(QuadratureMean(1.0, 1.0), np.zeros((2, 2))) == 2.0

    def test_pure_fluctuation(self):
        assert modulus_squared(QuadratureMean(0.0, 0.0), np.eye(2)) == 2.0

    def test_mixed_against_monte_carlo(self):
        # Sampled Gaussian oracle for mean (2,0), cov diag(1,3).
        exact = modulus_squared(QuadratureMean(2.0, 0.0), np.diag([1.0, 3.0]))
        assert exact == 8.0
        rng = np.random.default_rng(42)
        samples = rng.multivariate_normal([2.0, 0.0], np.diag([1.0, 3.0]), size=4_000_000)
        mc = float(np.mean((samples**2).sum(axis=1)))
        assert abs(mc - exact) < 0.02

    def test_rejects_asymmetric_cov(self):
        with pytest.raises(ValueError, match="symmetric"):
            modulus_squared(QuadratureMean(0.0, 0.0), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite_cov(self):
        with pytest.raises(ValueError, match="semidefinite"):
            modulus_squared(QuadratureMean(0.0, 0.0), np.diag([1.0, -1e-6]))

    def test_tolerates_rounding_level_asymmetry(self):
        cov = np.array([[1.0, 1e-12], [0.0, 1.0]])
        assert modulus_squared(QuadratureMean(0.0, 0.0), cov) == pytest.approx(2.0)

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 2 * math.pi),
           st.floats(0.0, 3.0), st.floats(0.0, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_rotation_invariance(self, r, i, theta, v1, v2):
        # Trace plus squared length: invariant under joint rotation.
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        cov = np.diag([v1, v2])
        before = modulus_squared(QuadratureMean(r, i), cov)
        mean_rot = rot @ np.array([r, i])
        cov_rot = rot @ cov @ rot.T
        cov_rot = 0.5 * (cov_rot + cov_rot.T)
        after = modulus_squared(mean_rot, cov_rot)
        assert after == pytest.approx(before, rel=1e-12, abs=1e-12)


class TestItoCovariance:
    def test_vacuum_pair(self):
        np.testing.assert_array_equal(ito_covariance(NoiseSpec.vacuum()), np.eye(2))

    def test_inverted_bath_by_expansion(self):
        # Expand Q = B + B^dag with the inverted table dB^dag dB = dt,
        # dB dB^dag = 0, then symmetrize.
        table = {("b", "bdag"): 0.0, ("bdag", "b"): 1.0,
                 ("b", "b"): 0.0, ("bdag", "bdag"): 0.0}

        def product(x_terms, y_terms):
            # x_terms/y_terms: list of (coefficient, operator) pairs.
            return sum(cx * cy * table[(ox, oy)] for cx, ox in x_terms for cy, oy in y_terms)

        q = [(1.0, "b"), (1.0, "bdag")]
        p = [(-1j, "b"), (1j, "bdag")]
        dqdq = product(q, q)
        dpdp = product(p, p)
        dqdp_sym = 0.5 * (product(q, p) + product(p, q))
        expected = np.array([[dqdq, dqdp_sym], [np.conj(dqdp_sym), dpdp]]).real
        np.testing.assert_allclose(ito_covariance(NoiseSpec.inverted_bath()), expected, atol=1e-15)

    def test_classical_wiener(self):
        np.testing.assert_array_equal(ito_covariance(NoiseSpec.classical_wiener()), np.array([[1.0]]))

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(NoiseKind.VACUUM, 1)
        with pytest.raises(ValueError):
            NoiseSpec(NoiseKind.CLASSICAL_WIENER, 2)


class TestRmsNorm:
    def test_constant_unit_intensity(self):
        assert rms_norm(np.ones(101), t=4.0) == pytest.approx(2.0, abs=1e-14)

    def test_zero_signal(self):
        assert rms_norm(np.zeros(11), t=7.3) == 0.0

    def test_linear_ramp_closed_form(self):
        # <|beta(s)|^2> = s on [0, 2]: integral is 2, norm sqrt(2); the
        # trapezoid rule is exact for a linear integrand.
        grid = np.linspace(0.0, 2.0, 2001)
        assert rms_norm(grid, times=grid) == pytest.approx(math.sqrt(2.0), rel=1e-13)

    def test_negative_sample_flags_corruption(self):
        with pytest.raises(ValueError, match="corrupt"):
            rms_norm([1.0, -1e-3, 1.0], t=1.0)

    @given(st.integers(2, 30), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_triangle_inequality(self, n, c1, c2, seed):
        # Piecewise drift pair with exactly computed norms of the sum: the
        # trapezoid weights form a weighted l2 norm, so the inequality is
        # exact for sampled signals.
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(0.0, 10.0, size=n))
        b1 = rng.normal(size=n) + 1j * rng.normal(size=n)
        b2 = rng.normal(size=n) + 1j * rng.normal(size=n)
        lhs = rms_norm(np.abs(c1 * b1 + c2 * b2) ** 2, times=t)
        rhs = abs(c1) * rms_norm(np.abs(b1) ** 2, times=t) + abs(c2) * rms_norm(np.abs(b2) ** 2, times=t)
        assert lhs <= rhs + 1e-9 * (1.0 + rhs)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 50),
           st.floats(0, 20), st.floats(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_root_splitting_inequality(self, mu, lam, t, g, norm):
        # sqrt(mu + lam t + g^2 s^2) <= sqrt(mu + lam t) + g s.
        lhs = math.sqrt(mu + lam * t + g**2 * norm**2)
        rhs = math.sqrt(mu + lam * t) + g * norm
        assert lhs <= rhs + 1e-9 * (1.0 + rhs)


class TestQuadratureMean:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            QuadratureMean(float("nan"), 0.0)
        with pytest.raises(ValueError):
            QuadratureMean(0.0, float("inf"))

    def test_array_roundtrip(self):
        np.testing.assert_array_equal(QuadratureMean(1.5, -2.0).as_array(), [1.5, -2.0])


class TestRunningNorm:
    def test_monotone_extension(self):
        rn = RunningNorm()
        rn1 = rn.extended([1.0, 1.0], [0.0, 2.0])
        rn2 = rn1.extended([1.0, 1.0, 1.0], [2.0, 3.0, 4.0])
        assert rn1.value_sq == pytest.approx(2.0)
        assert rn2.value_sq == pytest.approx(4.0)
        assert rn2.norm == pytest.approx(2.0)
        assert rn2.t == 4.0

    def test_rejects_negative_accumulation(self):
        with pytest.raises(ValueError):
            RunningNorm(-1.0, 0.0)
        with pytest.raises(ValueError, match="corrupt"):
            RunningNorm().extended([-1.0, 0.0], [0.0, 1.0])

    def test_rejects_backwards_extension(self):
        rn = RunningNorm(1.0, 5.0)
        with pytest.raises(ValueError):
            rn.extended([1.0], [4.0])
