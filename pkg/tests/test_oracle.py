"""Closed-form Gaussian divergences against quadrature and hand values."""

import numpy as np
import pytest

from nbw.errors import ConfigError
from nbw.oracle import (
    ZeroMeanGaussian,
    alpha_divergence,
    alpha_divergence_mean_shift,
    alpha_divergence_quadrature,
    alpha_information,
    equicorrelation,
    log_density_ratio,
    mean_shift_log_density_ratio,
)

I_HALF_D2_RHO08 = 0.6193829810859337  # dual-method value, frozen


def random_spd(rng, d):
    a = rng.normal(size=(d, d))
    return a @ a.T + 0.5 * np.eye(d)


class TestValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(ConfigError):
            ZeroMeanGaussian(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_non_pd(self):
        with pytest.raises(ConfigError):
            ZeroMeanGaussian(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_equicorrelation_range(self):
        with pytest.raises(ConfigError):
            equicorrelation(3, -0.6)
        with pytest.raises(ConfigError):
            equicorrelation(2, 1.0)
        assert equicorrelation(1, 0.9).shape == (1, 1)


class TestLogDensityRatio:
    def test_equal_laws_give_zero_everywhere(self):
        g = ZeroMeanGaussian(np.array([[2.0, 0.3], [0.3, 1.0]]))
        x = np.random.default_rng(0).normal(size=(20, 2))
        np.testing.assert_allclose(log_density_ratio(g, g, x), 0.0, atol=1e-12)

    def test_one_dimensional_value(self):
        q = ZeroMeanGaussian([[1.0]])
        p = ZeroMeanGaussian([[4.0]])
        assert log_density_ratio(q, p, [0.0]) == pytest.approx(0.5 * np.log(4.0), rel=1e-15)

    def test_normalizes_under_p(self):
        # E_P[exp(log q - log p)] = 1, checked by quadrature at d = 1
        q = ZeroMeanGaussian([[1.0]])
        p = ZeroMeanGaussian([[2.5]])
        t, w = np.polynomial.hermite.hermgauss(200)
        x = (np.sqrt(2.0 * 2.5) * t)[:, None]
        vals = np.exp(np.atleast_1d(log_density_ratio(q, p, x)))
        integral = float(w @ vals) / np.sqrt(np.pi)
        assert abs(integral - 1.0) < 1e-8

    def test_matches_log_density_difference(self):
        rng = np.random.default_rng(3)
        q = ZeroMeanGaussian(random_spd(rng, 3))
        p = ZeroMeanGaussian(random_spd(rng, 3))
        x = rng.normal(size=(10, 3))
        np.testing.assert_allclose(
            log_density_ratio(q, p, x), q.log_density(x) - p.log_density(x), atol=1e-10
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            log_density_ratio(ZeroMeanGaussian(np.eye(2)), ZeroMeanGaussian(np.eye(3)), [0.0, 0.0])


class TestAlphaDivergence:
    def test_equal_laws_give_zero(self):
        g = ZeroMeanGaussian(equicorrelation(3, 0.4))
        assert alpha_divergence(g, g, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_dual_method_d2(self):
        q = ZeroMeanGaussian(np.eye(2))
        p = ZeroMeanGaussian(equicorrelation(2, 0.8))
        closed = alpha_divergence(q, p, 0.5)
        quad = alpha_divergence_quadrature(q, p, 0.5)
        assert closed == pytest.approx(I_HALF_D2_RHO08, rel=1e-12)
        assert abs(closed - quad) < 1e-8

    def test_nonnegative_on_random_grid(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            q = ZeroMeanGaussian(random_spd(rng, 2))
            p = ZeroMeanGaussian(random_spd(rng, 2))
            for a in (0.2, 0.5, 0.8):
                assert alpha_divergence(q, p, a) >= -1e-12

    def test_infinite_when_blend_loses_pd(self):
        q = ZeroMeanGaussian(np.eye(5))
        p = ZeroMeanGaussian(equicorrelation(5, 0.8))
        assert alpha_divergence(q, p, 2.0) == np.inf
        assert alpha_divergence(q, p, -1.0) == np.inf

    def test_quadrature_refuses_high_dimension(self):
        g = ZeroMeanGaussian(np.eye(3))
        with pytest.raises(ConfigError):
            alpha_divergence_quadrature(g, g, 0.5)


class TestAlphaInformation:
    def test_zero_correlation_gives_zero(self):
        assert alpha_information(4, 0.0, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_monotone_in_correlation_magnitude(self):
        grid = [0.0, 0.2, 0.4, 0.6, 0.8]
        vals = [alpha_information(2, r, 0.5) for r in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert alpha_information(2, -0.5, 0.5) > alpha_information(2, -0.2, 0.5)


class TestMeanShift:
    def test_hellinger_value(self):
        # 4 * (1 - exp(-1/8)) for a unit shift at alpha = 1/2
        value = alpha_divergence_mean_shift(1.0, 0.5)
        assert value == pytest.approx(4.0 * (1.0 - np.exp(-0.125)), rel=1e-14)
        assert value == pytest.approx(0.4700123896616182, rel=1e-12)

    def test_against_quadrature(self):
        # E_P[(dQ/dP)^(1-a)] via Gauss-Hermite under P = N(0, 1)
        for a, delta in ((0.5, 1.0), (0.2, 0.7), (0.8, 1.5)):
            t, w = np.polynomial.hermite.hermgauss(200)
            x = np.sqrt(2.0) * t
            moment = float(w @ np.exp((1 - a) * mean_shift_log_density_ratio(x, delta))) / np.sqrt(np.pi)
            expected = (moment - 1.0) / (a * (a - 1.0))
            assert alpha_divergence_mean_shift(delta, a) == pytest.approx(expected, abs=1e-10)

    def test_zero_shift_gives_zero(self):
        assert alpha_divergence_mean_shift(0.0, 0.3) == pytest.approx(0.0, abs=1e-15)
