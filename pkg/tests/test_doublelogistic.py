"""Double-logistic evaluation, least-squares fitting, and the quality screen."""

import math

import numpy as np
import pytest

from asafcast.doublelogistic import (
    DlcParams,
    classify,
    dlc_eval,
    dlc_jacobian,
    nls_fit,
)
from asafcast.errors import InsufficientData
from asafcast.ingest import Sex
from asafcast.petolopez import AsafSeries

THETA = DlcParams(a1=0.2, a2=30.0, a3=0.1, a4=40.0, k=0.3)


def _eval_oracle(t, theta):
    u = t - 1950
    s1 = 1.0 / (1.0 + math.exp(-theta.a1 * (u - theta.a2)))
    s2 = 1.0 / (1.0 + math.exp(-theta.a3 * (u - theta.a2 - theta.a4)))
    return theta.k * (s1 - s2)


class TestEvaluation:
    def test_hand_computed_point(self):
        # at t = 1980 the first term sits exactly at its midpoint
        assert dlc_eval(1980, THETA) == pytest.approx(_eval_oracle(1980, THETA), abs=1e-15)
        assert dlc_eval(1980, THETA) == pytest.approx(0.1446041370, abs=1e-9)

    def test_matches_oracle_across_years(self):
        years = np.arange(1950, 2051)
        got = dlc_eval(years, THETA)
        want = [_eval_oracle(float(t), THETA) for t in years]
        assert np.allclose(got, want, atol=1e-14)

    def test_extreme_arguments_do_not_overflow(self):
        wild = DlcParams(a1=50.0, a2=-1000.0, a3=50.0, a4=100.0, k=1.0)
        values = dlc_eval(np.array([1950.0, 2050.0]), wild)
        assert np.all(np.isfinite(values))

    def test_rise_peak_decline_shape(self):
        years = np.arange(1950, 2101)
        g = dlc_eval(years, THETA)
        peak = int(np.argmax(g))
        assert 0 < peak < len(years) - 1
        assert np.all(np.diff(g[: peak + 1]) >= -1e-12)

    def test_array_and_params_inputs_agree(self):
        assert dlc_eval(1990, THETA) == dlc_eval(1990, THETA.as_array())


class TestJacobian:
    def test_matches_finite_differences(self):
        years = np.array([1960.0, 1975.0, 1990.0, 2005.0])
        theta = THETA.as_array()
        jac = dlc_jacobian(years, theta)
        eps = 1e-6
        for j in range(5):
            up, dn = theta.copy(), theta.copy()
            up[j] += eps
            dn[j] -= eps
            fd = (dlc_eval(years, up) - dlc_eval(years, dn)) / (2 * eps)
            assert np.allclose(jac[:, j], fd, atol=1e-6), f"parameter {j}"


def _noisy_series(theta, seed, sd=0.01, years=None):
    rng = np.random.default_rng(seed)
    if years is None:
        years = np.arange(1950, 2016)
    y = dlc_eval(years, theta) + rng.normal(0, sd, len(years))
    return AsafSeries("X", Sex.MALE, dict(zip(map(int, years), map(float, y))))


class TestFitting:
    def test_recovers_known_parameters(self):
        # decline must fall inside the observation window for a3 to be identified
        theta = DlcParams(a1=0.25, a2=20.0, a3=0.15, a4=30.0, k=0.3)
        series = _noisy_series(theta, seed=5)
        report = nls_fit(series)
        got = report.theta_hat
        for name in ("a1", "a2", "a3", "a4", "k"):
            rel = abs(getattr(got, name) - getattr(theta, name)) / getattr(theta, name)
            assert rel < 0.15, f"{name}: {getattr(got, name)}"
        assert report.r_squared > 0.95

    def test_deterministic(self):
        series = _noisy_series(THETA, seed=6)
        r1, r2 = nls_fit(series), nls_fit(series)
        assert r1 == r2

    def test_too_few_points(self):
        series = AsafSeries("X", Sex.MALE, {1990 + i: 0.1 for i in range(5)})
        with pytest.raises(InsufficientData):
            nls_fit(series)

    def test_perfect_fit_r_squared_one(self):
        years = np.arange(1950, 2016)
        y = dlc_eval(years, THETA)
        series = AsafSeries("X", Sex.MALE, dict(zip(map(int, years), map(float, y))))
        assert nls_fit(series).r_squared > 1 - 1e-8

    def test_constant_series_r_squared_zero(self):
        series = AsafSeries("X", Sex.MALE, {1950 + i: 0.1 for i in range(20)})
        assert nls_fit(series).r_squared == 0.0

    def test_bounds_respected(self):
        series = _noisy_series(THETA, seed=7, sd=0.05)
        theta = nls_fit(series).theta_hat
        assert theta.a1 > 0 and theta.a3 > 0 and theta.k > 0
        assert 0.0 <= theta.a4 <= 100.0


class TestClassification:
    def _report(self, n_obs=20, max_obs=0.2, r_squared=0.9):
        from asafcast.doublelogistic import FitReport

        return FitReport(THETA, r_squared, n_obs, max_obs, True)

    def test_male_thresholds(self):
        assert classify(self._report(), Sex.MALE)
        assert not classify(self._report(n_obs=10), Sex.MALE)
        assert not classify(self._report(max_obs=0.05), Sex.MALE)
        assert not classify(self._report(r_squared=0.5), Sex.MALE)
        assert classify(self._report(n_obs=11, max_obs=0.051, r_squared=0.501), Sex.MALE)

    def test_female_thresholds(self):
        assert classify(self._report(max_obs=0.02, r_squared=0.7), Sex.FEMALE)
        assert not classify(self._report(max_obs=0.01, r_squared=0.7), Sex.FEMALE)
        assert not classify(self._report(max_obs=0.02, r_squared=0.6), Sex.FEMALE)
        assert not classify(self._report(n_obs=10, max_obs=0.02, r_squared=0.7), Sex.FEMALE)

    def test_female_bar_lower_on_level_higher_on_fit(self):
        # a faint but well-fit series passes for women only
        faint = self._report(max_obs=0.03, r_squared=0.7)
        assert classify(faint, Sex.FEMALE) and not classify(faint, Sex.MALE)
        rough = self._report(max_obs=0.2, r_squared=0.55)
        assert classify(rough, Sex.MALE) and not classify(rough, Sex.FEMALE)
