"""Tests for first-order bias and MSE, the bounds and the error penalty."""

import math

import numpy as np
import pytest

from meerr.estimators import FAMILY, DerivativeProfile, EstimatorConfig, Member, derivative_profile, optimal_params
from meerr.population import build_moments, multiple_correlation_sq
from meerr.theory import (
    bias_first_order,
    decompose,
    error_penalty,
    min_mse,
    min_mse_no_error,
    mse_first_order,
    mse_no_error,
    optimum_gradient_no_error,
    relative_efficiency,
    theory_for,
    variance_plain_mean,
)
from tests.conftest import random_config, random_spec, scenario_w


class TestScenarioW:
    """Hand-computed values for scenario W."""

    def test_min_mse_coefficient(self, spec_w, moments_w):
        assert 400 * min_mse(moments_w, spec_w, 400) == pytest.approx(28.5349, rel=1e-5)

    def test_min_mse_no_error(self, spec_w, moments_w):
        assert min_mse_no_error(moments_w, spec_w, 100) == pytest.approx(0.2256, rel=1e-10)

    def test_min_mse_no_error_is_residual_variance(self, spec_w, moments_w):
        r2 = multiple_correlation_sq(spec_w, moments_w)
        expected = spec_w.sigma0**2 / 100 * (1.0 - r2)
        assert min_mse_no_error(moments_w, spec_w, 100) == pytest.approx(expected, rel=1e-12)

    def test_error_penalty(self, spec_w, moments_w):
        assert error_penalty(moments_w, spec_w, 100) == pytest.approx(0.0597486, rel=1e-5)
        gap = min_mse(moments_w, spec_w, 100) - min_mse_no_error(moments_w, spec_w, 100)
        assert error_penalty(moments_w, spec_w, 100) == pytest.approx(gap, rel=1e-12)

    def test_variance_plain_mean(self, spec_w):
        assert variance_plain_mean(spec_w, 100) == pytest.approx(0.4)
        assert variance_plain_mean(spec_w, 400) == pytest.approx(0.1)

    def test_olkin_equal_weights(self, spec_w, moments_w):
        profile = derivative_profile(EstimatorConfig(Member.M1, omega=(0.5, 0.5)))
        assert mse_first_order(profile, moments_w, spec_w, 100) == pytest.approx(0.301, rel=1e-12)
        assert bias_first_order(profile, moments_w, spec_w, 100) == pytest.approx(0.0049, rel=1e-12)

    def test_product_bias(self, spec_w, moments_w):
        profile = derivative_profile(EstimatorConfig(Member.M2, omega=(0.5, 0.5)))
        assert bias_first_order(profile, moments_w, spec_w, 100) == pytest.approx(0.0066, rel=1e-12)

    def test_difference_is_unbiased(self, spec_w, moments_w):
        config = optimal_params(Member.M18, spec_w, moments_w)
        assert theory_for(config, spec_w, 100, moments_w).bias == 0.0

    def test_decomposition_adds_up(self, spec_w, moments_w):
        profile = derivative_profile(EstimatorConfig(Member.M5, omega=(0.2, 0.8)))
        parts = decompose(profile, moments_w, spec_w)
        mse = mse_first_order(profile, moments_w, spec_w, 50)
        assert spec_w.mu0**2 / 50 * parts.total == pytest.approx(mse, rel=1e-12)
        assert parts.base == pytest.approx(0.1)


class TestTheoryFor:
    """TheoryResult for whole configs."""

    def test_plain_mean(self, spec_w):
        result = theory_for(EstimatorConfig(Member.PLAIN), spec_w, 100)
        assert result.mse == pytest.approx(0.4)
        assert result.bias == 0.0
        assert result.mse_coefficient == pytest.approx(40.0)
        assert relative_efficiency(result, spec_w) == pytest.approx(100.0)

    def test_estimated_optimum(self, spec_w, moments_w):
        result = theory_for(EstimatorConfig(Member.EST, label="plug-in"), spec_w, 400)
        assert result.label == "plug-in"
        assert result.mse == pytest.approx(min_mse(moments_w, spec_w, 400))
        assert math.isnan(result.bias)

    def test_label_defaults_to_member(self, spec_w):
        assert theory_for(EstimatorConfig(Member.M2, omega=(0.5, 0.5)), spec_w, 10).label == "M2"

    def test_optimum_beats_plain_mean(self, spec_w):
        result = theory_for(optimal_params(Member.M16, spec_w), spec_w, 100)
        assert relative_efficiency(result, spec_w) > 100.0

    def test_sample_size_must_be_positive(self, spec_w, moments_w):
        with pytest.raises(ValueError):
            min_mse(moments_w, spec_w, 0)


class TestBounds:
    """Dominance of the minimum and the price of measurement errors."""

    @pytest.mark.parametrize("member", FAMILY)
    def test_no_member_beats_the_minimum(self, member, spec_w, moments_w, rng):
        floor = min_mse(moments_w, spec_w, 1)
        for _ in range(200):
            config = random_config(rng, member, spec_w.p)
            profile = derivative_profile(config, spec_w.mu0, spec_w.mu)
            assert mse_first_order(profile, moments_w, spec_w, 1) >= floor - 1e-12

    def test_minimum_never_exceeds_plain_mean(self, rng):
        for _ in range(100):
            spec = random_spec(rng, int(rng.integers(1, 4)))
            moments = build_moments(spec)
            assert min_mse(moments, spec, 10) <= variance_plain_mean(spec, 10) + 1e-15

    def test_no_error_optimum_attains_no_error_minimum(self, spec_w, moments_w):
        d = optimum_gradient_no_error(moments_w)
        profile = DerivativeProfile(d=d, H=np.zeros((2, 2)), c=d)
        assert mse_no_error(profile, moments_w, spec_w, 100) == pytest.approx(
            min_mse_no_error(moments_w, spec_w, 100), rel=1e-12
        )

    def test_penalty_positive_with_errors(self, rng):
        for _ in range(500):
            spec = random_spec(rng, int(rng.integers(1, 4)), with_errors=True)
            moments = build_moments(spec)
            assert np.any(moments.b != 0.0)
            assert error_penalty(moments, spec, 1) > 0.0

    def test_penalty_zero_without_errors(self, rng):
        for _ in range(100):
            spec = random_spec(rng, int(rng.integers(1, 4)), with_errors=False)
            moments = build_moments(spec)
            assert error_penalty(moments, spec, 1) == pytest.approx(0.0, abs=1e-14)

    def test_penalty_grows_with_study_error(self):
        penalties = [
            error_penalty(build_moments(spec), spec, 100)
            for spec in (scenario_w(c0_err=v) for v in (0.0, 0.05, 0.1))
        ]
        assert penalties[0] < penalties[1] < penalties[2]


def _literal_mse(spec, moments, d):
    """(mu0^2/n)[C0^2 + C_(0)^2 + 2 b'd + d'A d] at n = 1, written out term by term."""
    a, b = moments.A, moments.b
    return spec.mu0**2 * (spec.c0**2 + spec.c0_err**2 + 2.0 * b @ d + d @ a @ d)


class TestLiteralClosedForms:
    """Independent literal MSE and bias expressions, one per member.

    Discrepancies between the commonly quoted closed forms and the exact first
    order expansion are asserted explicitly.
    """

    @pytest.fixture
    def setting(self, rng):
        spec = random_spec(rng, 3)
        return spec, build_moments(spec), rng

    def _mse(self, config, spec, moments):
        return mse_first_order(derivative_profile(config, spec.mu0, spec.mu), moments, spec, 1)

    def _bias(self, config, spec, moments):
        return bias_first_order(derivative_profile(config, spec.mu0, spec.mu), moments, spec, 1)

    def test_ratio_type_weights(self, setting):
        spec, moments, rng = setting
        for member in (Member.M1, Member.M5, Member.M6):
            config = random_config(rng, member, 3)
            w = config.omega_array
            literal = spec.mu0**2 * (spec.c0**2 + spec.c0_err**2 - 2 * moments.b @ w + w @ moments.A @ w)
            assert self._mse(config, spec, moments) == pytest.approx(literal, rel=1e-12)

    def test_product_type_weights(self, setting):
        spec, moments, rng = setting
        for member in (Member.M2, Member.M7, Member.M8):
            config = random_config(rng, member, 3)
            assert self._mse(config, spec, moments) == pytest.approx(
                _literal_mse(spec, moments, config.omega_array), rel=1e-12
            )

    def test_shukla_john_with_scaled_weights(self, setting):
        spec, moments, rng = setting
        config = random_config(rng, Member.M3, 3)
        w = config.omega_array
        w_star = w * spec.mu_array
        s = w @ spec.mu_array
        literal = spec.mu0**2 * (
            spec.c0**2 + spec.c0_err**2 - 2 * moments.b @ w_star / s + w_star @ moments.A @ w_star / s**2
        )
        assert self._mse(config, spec, moments) == pytest.approx(literal, rel=1e-12)

    def test_mean_product_form_quoted_with_unscaled_weights(self, setting):
        spec, moments, rng = setting
        config = random_config(rng, Member.M4, 3)
        w = config.omega_array
        s = w @ spec.mu_array
        quoted = spec.mu0**2 * (spec.c0**2 + spec.c0_err**2 + 2 * moments.b @ w / s + w @ moments.A @ w / s**2)
        exact = self._mse(config, spec, moments)
        assert exact != pytest.approx(quoted, rel=1e-6)
        assert exact == pytest.approx(_literal_mse(spec, moments, w * spec.mu_array / s), rel=1e-12)

    def test_mean_product_form_agrees_for_unit_means(self, rng):
        spec = scenario_w(mu=(1.0, 1.0))
        moments = build_moments(spec)
        config = random_config(rng, Member.M4, 2)
        w = config.omega_array
        s = w.sum()
        quoted = spec.mu0**2 * (spec.c0**2 + spec.c0_err**2 + 2 * moments.b @ w / s + w @ moments.A @ w / s**2)
        assert self._mse(config, spec, moments) == pytest.approx(quoted, rel=1e-12)

    def test_slack_ratio_quoted_with_wrong_cross_sign(self, setting):
        spec, moments, rng = setting
        config = random_config(rng, Member.M9, 3)
        w = config.omega_array[:-1]
        quoted = _literal_mse(spec, moments, w)
        exact = self._mse(config, spec, moments)
        assert exact == pytest.approx(_literal_mse(spec, moments, -w), rel=1e-12)
        assert exact != pytest.approx(quoted, rel=1e-6)

    def test_slack_product(self, setting):
        spec, moments, rng = setting
        config = random_config(rng, Member.M10, 3)
        assert self._mse(config, spec, moments) == pytest.approx(
            _literal_mse(spec, moments, config.omega_array[:-1]), rel=1e-12
        )

    def test_power_members(self, setting):
        spec, moments, rng = setting
        alpha = rng.normal(size=3)
        m12 = EstimatorConfig(Member.M12, alpha=alpha)
        m13 = EstimatorConfig(Member.M13, alpha=alpha)
        assert self._mse(m12, spec, moments) == pytest.approx(_literal_mse(spec, moments, alpha), rel=1e-12)
        assert self._mse(m13, spec, moments) == pytest.approx(_literal_mse(spec, moments, -alpha), rel=1e-12)

    def test_walsh_quoted_in_shifted_parameter(self, setting):
        spec, moments, rng = setting
        alpha = rng.normal(size=3)
        exact = self._mse(EstimatorConfig(Member.M14, alpha=alpha), spec, moments)
        # the quoted form -2b'a + a'Aa holds for a = alpha - 1, not for alpha itself
        assert exact == pytest.approx(_literal_mse(spec, moments, -(alpha - 1.0)), rel=1e-12)
        assert exact != pytest.approx(_literal_mse(spec, moments, -alpha), rel=1e-6)

    def test_exponential_members(self, setting):
        spec, moments, rng = setting
        theta = rng.normal(size=3)
        for member in (Member.M15, Member.M16):
            config = EstimatorConfig(member, theta=theta)
            assert self._mse(config, spec, moments) == pytest.approx(_literal_mse(spec, moments, theta), rel=1e-12)
        config = random_config(rng, Member.M17, 3)
        assert self._mse(config, spec, moments) == pytest.approx(
            _literal_mse(spec, moments, config.theta_array), rel=1e-12
        )

    def test_difference_quoted_without_mean_scaling(self, setting):
        spec, moments, rng = setting
        alpha = rng.normal(size=3)
        scaled = alpha * spec.mu_array
        quoted = (spec.c0**2 + spec.c0_err**2 + 2 * spec.mu0 * moments.b @ scaled + scaled @ moments.A @ scaled)
        exact = self._mse(EstimatorConfig(Member.M18, alpha=alpha), spec, moments)
        assert exact == pytest.approx(_literal_mse(spec, moments, scaled / spec.mu0), rel=1e-12)
        assert exact != pytest.approx(quoted, rel=1e-6)

    def test_bias_of_weighted_members(self, setting):
        spec, moments, rng = setting
        a, b, cd = moments.A, moments.b, moments.C_diag
        mu0 = spec.mu0
        w = random_config(rng, Member.M1, 3).omega_array
        quoted = {
            Member.M1: mu0 * (cd @ w - b @ w),
            Member.M2: mu0 * (b @ w),
            Member.M5: mu0 / 2 * (w @ a @ w + cd @ w - 2 * b @ w),
            Member.M6: mu0 * (w @ a @ w - b @ w),
            Member.M7: mu0 / 2 * (w @ a @ w - cd @ w + 2 * b @ w),
            Member.M8: mu0 * (w @ a @ w - cd @ w + b @ w),
        }
        for member, value in quoted.items():
            assert self._bias(EstimatorConfig(member, omega=w), spec, moments) == pytest.approx(value, rel=1e-10)

    def test_bias_of_exponent_members(self, setting):
        spec, moments, rng = setting
        a, b, cd = moments.A, moments.b, moments.C_diag
        mu0 = spec.mu0
        t = rng.normal(size=3)
        m12 = self._bias(EstimatorConfig(Member.M12, alpha=t), spec, moments)
        m16 = self._bias(EstimatorConfig(Member.M16, theta=t), spec, moments)
        assert m12 == pytest.approx(mu0 / 2 * (t @ a @ t - cd @ t + 2 * b @ t), rel=1e-10)
        assert m16 == pytest.approx(mu0 / 2 * (t @ a @ t + 2 * b @ t), rel=1e-10)
        config = random_config(rng, Member.M17, 3)
        w, th = config.omega_array, config.theta_array
        m17 = self._bias(config, spec, moments)
        assert m17 == pytest.approx(mu0 / 2 * (cd @ (th * (th / w - 1.0)) + 2 * b @ th), rel=1e-10)

    def test_dual_power_bias_quoted_with_wrong_interaction_sign(self, setting):
        spec, moments, rng = setting
        a, b, cd = moments.A, moments.b, moments.C_diag
        alpha = rng.normal(size=3)
        quoted = spec.mu0 / 2 * (cd @ alpha - alpha @ a @ alpha - 2 * b @ alpha)
        exact = self._bias(EstimatorConfig(Member.M13, alpha=alpha), spec, moments)
        assert exact != pytest.approx(quoted, rel=1e-6)

    def test_dual_power_bias_agrees_with_one_auxiliary(self, spec_one):
        moments = build_moments(spec_one)
        a, b, cd = moments.A, moments.b, moments.C_diag
        alpha = np.array([0.7])
        quoted = spec_one.mu0 / 2 * (cd @ alpha - alpha @ a @ alpha - 2 * b @ alpha)
        exact = self._bias(EstimatorConfig(Member.M13, alpha=alpha), spec_one, moments)
        assert exact == pytest.approx(quoted, rel=1e-12)
