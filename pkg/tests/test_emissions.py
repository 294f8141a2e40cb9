"""Emission-law tests: log-likelihood values, normalization, weighted MLE fits."""

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from actisleep import (
    SleepEmission,
    WakeEmission,
    fit_sleep_weighted,
    fit_wake_weighted,
    sleep_log_emission,
    wake_log_emission,
)
from actisleep.emissions import (
    SIGMA_FLOOR,
    _fit_truncnorm_weighted,
    _trunc_grad_hess,
    _trunc_loglik,
    sleep_objective,
)
from actisleep.errors import DegenerateWeightError, InputError

mpmath.mp.dps = 50

TABLE_SLEEP = SleepEmission(alpha=0.731, mu1=2.486, sigma1=1.248)
TABLE_WAKE = WakeEmission(mu2=4.803, sigma2=0.866)


def _mp_sleep_log_emission(obs, alpha, mu1, sigma1):
    """Independent high-precision evaluation of the sleep emission."""
    obs, alpha, mu1, sigma1 = map(mpmath.mpf, (obs, alpha, mu1, sigma1))
    z = (obs - mu1) / sigma1
    phi = mpmath.exp(-z * z / 2) / mpmath.sqrt(2 * mpmath.pi)
    trunc_mass = 1 - mpmath.ncdf(-mu1 / sigma1)
    density = (1 - alpha) * phi / (sigma1 * trunc_mass)
    if obs == 0:
        return float(mpmath.log(alpha + density))
    return float(mpmath.log(density))


def _mp_wake_log_emission(obs, mu2, sigma2):
    obs, mu2, sigma2 = map(mpmath.mpf, (obs, mu2, sigma2))
    z = (obs - mu2) / sigma2
    return float(-mpmath.log(sigma2) - mpmath.log(2 * mpmath.pi) / 2 - z * z / 2)


class TestSleepLogEmission:
    def test_point_mass_dominates(self):
        p = SleepEmission(alpha=1 - 1e-12, mu1=2.0, sigma1=1.0)
        assert sleep_log_emission(0.0, p) == pytest.approx(0.0, abs=1e-10)

    def test_zero_obs_half_alpha_standard_normal(self):
        # log(0.5 + 0.5 * phi(0) / (1 * Phi(0))) evaluated at high precision
        p = SleepEmission(alpha=0.5, mu1=0.0, sigma1=1.0)
        expected = _mp_sleep_log_emission(0, 0.5, 0, 1)
        assert expected == pytest.approx(-0.10653645079702144, abs=1e-14)
        assert sleep_log_emission(0.0, p) == pytest.approx(expected, abs=1e-12)

    def test_table_parameters_at_mode(self):
        expected = _mp_sleep_log_emission(2.486, 0.731, 2.486, 1.248)
        assert sleep_log_emission(2.486, TABLE_SLEEP) == pytest.approx(
            expected, abs=1e-12
        )

    def test_random_values_match_oracle(self):
        rng = np.random.Generator(np.random.PCG64(1))
        for _ in range(50):
            p = SleepEmission(
                alpha=rng.uniform(0.05, 0.95),
                mu1=rng.uniform(-2, 4),
                sigma1=rng.uniform(0.2, 3),
            )
            obs = 0.0 if rng.random() < 0.3 else rng.uniform(0, 8)
            expected = _mp_sleep_log_emission(obs, p.alpha, p.mu1, p.sigma1)
            assert sleep_log_emission(obs, p) == pytest.approx(expected, abs=1e-11)

    def test_non_finite_obs_rejected(self):
        with pytest.raises(InputError):
            sleep_log_emission(np.nan, TABLE_SLEEP)

    def test_negative_obs_rejected(self):
        with pytest.raises(InputError):
            sleep_log_emission(-0.5, TABLE_SLEEP)

    def test_vectorized_matches_scalar(self):
        obs = np.array([0.0, 0.7, 2.486, 5.0])
        vec = sleep_log_emission(obs, TABLE_SLEEP)
        assert vec.shape == obs.shape
        for i, o in enumerate(obs):
            assert vec[i] == sleep_log_emission(float(o), TABLE_SLEEP)


class TestWakeLogEmission:
    def test_at_mean_unit_sigma(self):
        p = WakeEmission(mu2=3.0, sigma2=1.0)
        assert wake_log_emission(3.0, p) == pytest.approx(
            -0.9189385332046727, abs=1e-14
        )

    def test_table_parameters(self):
        expected = _mp_wake_log_emission(4.803, 4.803, 0.866)
        assert wake_log_emission(4.803, TABLE_WAKE) == pytest.approx(
            expected, abs=1e-13
        )
        # -log(0.866) - log(sqrt(2*pi))
        assert expected == pytest.approx(-0.7750681627849708, abs=1e-12)

    def test_symmetry(self):
        p = WakeEmission(mu2=4.803, sigma2=0.866)
        for c in (0.1, 1.0, 2.5):
            assert wake_log_emission(p.mu2 + c, p) == wake_log_emission(p.mu2 - c, p)


class TestNormalization:
    @pytest.mark.parametrize(
        "p",
        [
            TABLE_SLEEP,
            SleepEmission(alpha=0.1, mu1=-1.0, sigma1=0.5),
            SleepEmission(alpha=0.9, mu1=5.0, sigma1=2.0),
            SleepEmission(alpha=0.5, mu1=0.0, sigma1=1.0),
        ],
    )
    def test_sleep_mass_plus_integral_is_one(self, p):
        density = lambda v: (1 - p.alpha) * np.exp(
            sleep_log_emission(v, p) - np.log1p(-p.alpha)
        )
        # continuous part only; at v > 0 sleep_log_emission is the full log density
        cont = lambda v: np.exp(sleep_log_emission(float(v), p))
        integral, err = quad(cont, 1e-12, 20.0, limit=200)
        assert p.alpha + integral == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize(
        "p",
        [TABLE_WAKE, WakeEmission(mu2=0.0, sigma2=0.3), WakeEmission(mu2=10.0, sigma2=2.0)],
    )
    def test_wake_integrates_to_one(self, p):
        density = lambda v: np.exp(wake_log_emission(float(v), p))
        integral, err = quad(
            density, p.mu2 - 10 * p.sigma2, p.mu2 + 10 * p.sigma2, limit=200
        )
        assert integral == pytest.approx(1.0, abs=1e-8)


class TestFitWakeWeighted:
    def test_two_point(self):
        p = fit_wake_weighted([1.0, 3.0], [1.0, 1.0])
        assert p.mu2 == 2.0
        assert p.sigma2 == 1.0

    def test_zero_weight_excluded(self):
        p = fit_wake_weighted([1.0, 3.0], [1.0, 0.0])
        assert p.mu2 == 1.0
        assert p.sigma2 == SIGMA_FLOOR

    def test_recovery_from_samples(self):
        rng = np.random.Generator(np.random.PCG64(2))
        obs = rng.normal(4.803, 0.866, size=10000)
        p = fit_wake_weighted(obs, np.ones(obs.size))
        assert p.mu2 == pytest.approx(4.803, abs=0.03)
        assert p.sigma2 == pytest.approx(0.866, abs=0.03)

    def test_binary_weights_equal_subsample_mle(self):
        rng = np.random.Generator(np.random.PCG64(3))
        obs = rng.normal(2.0, 1.0, size=200)
        w = (rng.random(200) < 0.5).astype(float)
        sub = obs[w == 1.0]
        p = fit_wake_weighted(obs, w)
        assert p.mu2 == pytest.approx(sub.mean(), abs=1e-12)
        assert p.sigma2 == pytest.approx(np.sqrt(np.mean((sub - sub.mean()) ** 2)), abs=1e-12)

    def test_all_zero_weights_rejected(self):
        with pytest.raises(DegenerateWeightError):
            fit_wake_weighted([1.0, 2.0], [0.0, 0.0])


class TestTruncnormDerivatives:
    def test_gradient_and_hessian_match_finite_differences(self):
        rng = np.random.Generator(np.random.PCG64(4))
        o = np.abs(rng.normal(2.0, 1.2, size=300))
        wt = rng.uniform(0.0, 1.0, size=300)
        h = 1e-6
        for mu, sigma in [(2.0, 1.0), (0.5, 0.8), (3.5, 2.0), (-1.0, 1.5)]:
            grad, hess = _trunc_grad_hess(mu, sigma, o, wt)
            g_mu = (_trunc_loglik(mu + h, sigma, o, wt) - _trunc_loglik(mu - h, sigma, o, wt)) / (2 * h)
            g_sg = (_trunc_loglik(mu, sigma + h, o, wt) - _trunc_loglik(mu, sigma - h, o, wt)) / (2 * h)
            assert grad[0] == pytest.approx(g_mu, rel=1e-5, abs=1e-4)
            assert grad[1] == pytest.approx(g_sg, rel=1e-5, abs=1e-4)
            h2 = 1e-4  # wider step: second differences amplify rounding noise
            h_mumu = (
                _trunc_loglik(mu + h2, sigma, o, wt)
                - 2 * _trunc_loglik(mu, sigma, o, wt)
                + _trunc_loglik(mu - h2, sigma, o, wt)
            ) / h2**2
            assert hess[0, 0] == pytest.approx(h_mumu, rel=1e-4, abs=1e-3)

    def test_clean_truncated_normal_fit(self):
        rng = np.random.Generator(np.random.PCG64(5))
        draws = rng.normal(2.486, 1.248, size=40000)
        o = draws[draws >= 0][:20000]
        mu, sigma = _fit_truncnorm_weighted(o, np.ones(o.size), 1.0, 1.0)
        assert mu == pytest.approx(2.486, abs=0.05)
        assert sigma == pytest.approx(1.248, abs=0.05)


def _sample_sleep(rng, p, n):
    """Draw n values from a SleepEmission (continuous sampler oracle)."""
    vals = np.zeros(n)
    mask = rng.random(n) >= p.alpha
    k = int(mask.sum())
    draws = []
    while len(draws) < k:
        d = rng.normal(p.mu1, p.sigma1, size=max(k, 16))
        draws.extend(d[d >= 0].tolist())
    vals[mask] = draws[:k]
    return vals


class TestFitSleepWeighted:
    def test_all_zero_obs_alpha_saturates(self):
        obs = np.zeros(100)
        w = np.ones(100)
        fitted = fit_sleep_weighted(obs, w, SleepEmission(0.5, 1.0, 1.0))
        assert fitted.alpha >= 0.99

    def test_recovery_from_continuous_samples(self):
        rng = np.random.Generator(np.random.PCG64(6))
        obs = _sample_sleep(rng, TABLE_SLEEP, 10000)
        fitted = fit_sleep_weighted(obs, np.ones(obs.size), SleepEmission(0.5, 1.0, 1.0))
        assert fitted.alpha == pytest.approx(0.731, abs=0.03)
        assert fitted.mu1 == pytest.approx(2.486, abs=0.05)
        assert fitted.sigma1 == pytest.approx(1.248, abs=0.05)

    def test_repeated_single_value_hits_sigma_floor(self):
        obs = np.full(50, 2.0)
        fitted = fit_sleep_weighted(obs, np.ones(50), SleepEmission(0.5, 1.0, 1.0))
        assert fitted.sigma1 == SIGMA_FLOOR

    def test_ascent_over_init(self):
        rng = np.random.Generator(np.random.PCG64(7))
        for _ in range(20):
            p = SleepEmission(
                alpha=rng.uniform(0.1, 0.9),
                mu1=rng.uniform(0.5, 4),
                sigma1=rng.uniform(0.3, 2),
            )
            obs = _sample_sleep(rng, p, 400)
            w = rng.uniform(0.0, 1.0, size=400)
            init = SleepEmission(0.5, 1.0, 1.0)
            fitted = fit_sleep_weighted(obs, w, init)
            assert sleep_objective(obs, w, fitted) >= sleep_objective(obs, w, init) - 1e-9

    def test_all_zero_weights_rejected(self):
        with pytest.raises(DegenerateWeightError):
            fit_sleep_weighted(np.array([0.0, 1.0]), np.array([0.0, 0.0]), TABLE_SLEEP)

    def test_weights_outside_unit_interval_rejected(self):
        with pytest.raises(InputError):
            fit_sleep_weighted(np.array([0.0, 1.0]), np.array([0.5, 1.5]), TABLE_SLEEP)


class TestParameterValidation:
    def test_alpha_bounds(self):
        with pytest.raises(InputError):
            SleepEmission(alpha=0.0, mu1=1.0, sigma1=1.0)
        with pytest.raises(InputError):
            SleepEmission(alpha=1.0, mu1=1.0, sigma1=1.0)

    def test_sigma_floor(self):
        with pytest.raises(InputError):
            SleepEmission(alpha=0.5, mu1=1.0, sigma1=1e-4)
        with pytest.raises(InputError):
            WakeEmission(mu2=1.0, sigma2=0.0)
