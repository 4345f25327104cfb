"""Joint log-density checks against independent scipy.stats evaluations."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy import stats

from asafcast import dists
from asafcast.doublelogistic import dlc_eval
from asafcast.ingest import Sex
from asafcast.model import (
    A2M_UPPER,
    CountryParams,
    GlobalParams,
    HyperParams,
    ModelState,
    Variant,
    build_country_data,
    latent_residuals,
    log_likelihood,
    log_latent,
    log_posterior,
    log_prior_country,
    log_prior_global,
    prior_means,
)
from conftest import TRUE_GLOBALS, draw_country_params, synthetic_corpus

HYPER = HyperParams()


# --- independent density helpers (scipy.stats, not package code) -------------


def ref_norm(x, mean, var):
    return stats.norm.logpdf(x, mean, math.sqrt(var))


def ref_truncnorm(x, mean, var, lower=-np.inf, upper=np.inf):
    sd = math.sqrt(var)
    return stats.truncnorm.logpdf(x, (lower - mean) / sd, (upper - mean) / sd, mean, sd)


def ref_gamma(x, shape, rate):
    return stats.gamma.logpdf(x, shape, scale=1.0 / rate)


def ref_invgamma(x, shape, scale):
    return stats.invgamma.logpdf(x, shape, scale=scale)


def ref_lognorm(x, mu, var):
    return stats.lognorm.logpdf(x, math.sqrt(var), scale=math.exp(mu))


class TestScalarDensities:
    """Every in-house log density agrees with scipy.stats on its support."""

    xs = [0.05, 0.4, 1.7, 9.0]

    def test_normal(self):
        for x in self.xs:
            assert dists.norm_logpdf(x, 0.3, 2.1) == pytest.approx(
                ref_norm(x, 0.3, 2.1), abs=1e-12
            )

    def test_truncnorm(self):
        cases = [(0.0, None), (None, 65.0), (0.0, 100.0)]
        for lower, upper in cases:
            lo = -np.inf if lower is None else lower
            hi = np.inf if upper is None else upper
            for x in self.xs:
                got = dists.truncnorm_logpdf(x, 2.0, 9.0, lower=lo, upper=hi)
                assert got == pytest.approx(ref_truncnorm(x, 2.0, 9.0, lo, hi), abs=1e-10)

    def test_gamma(self):
        for x in self.xs:
            assert dists.gamma_logpdf(x, 2.0, 5.5) == pytest.approx(
                ref_gamma(x, 2.0, 5.5), abs=1e-12
            )

    def test_invgamma(self):
        for x in self.xs:
            assert dists.invgamma_logpdf(x, 2.0, 0.3) == pytest.approx(
                ref_invgamma(x, 2.0, 0.3), abs=1e-12
            )

    def test_lognormal(self):
        for x in self.xs:
            assert dists.lognorm_logpdf(x, -1.0, 0.8) == pytest.approx(
                ref_lognorm(x, -1.0, 0.8), abs=1e-12
            )

    def test_off_support_is_minus_inf(self):
        assert dists.gamma_logpdf(-1.0, 2.0, 1.0) == -np.inf
        assert dists.invgamma_logpdf(0.0, 2.0, 1.0) == -np.inf
        assert dists.lognorm_logpdf(-0.1, 0.0, 1.0) == -np.inf
        assert dists.truncnorm_logpdf(-0.1, 1.0, 1.0, lower=0.0) == -np.inf
        assert dists.truncnorm_logpdf(66.0, 24.0, 9.0, upper=65.0) == -np.inf


class TestQuadrature:
    """Every univariate prior integrates to one."""

    def _integrates_to_one(self, logpdf, breakpoints):
        # piecewise integration: a breakpoint at the mass keeps quad honest
        # on spiky densities with long tails
        total = sum(
            integrate.quad(lambda x: math.exp(logpdf(x)), lo, hi, limit=500)[0]
            for lo, hi in zip(breakpoints, breakpoints[1:])
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_level4_priors(self):
        hp = HYPER
        inf = np.inf
        cases = [
            (lambda x: dists.gamma_logpdf(x, hp.alpha_a1m, hp.beta_a1m), [0, 0.2, inf]),
            (lambda x: dists.norm_logpdf(x, hp.alpha_a2m, hp.beta_a2m), [-inf, hp.alpha_a2m, inf]),
            (lambda x: dists.truncnorm_logpdf(x, hp.alpha_a3m, hp.beta_a3m, lower=0.0),
             [0, hp.alpha_a3m, inf]),
            (lambda x: dists.norm_logpdf(x, hp.alpha_km, hp.beta_km), [-inf, hp.alpha_km, inf]),
            (lambda x: dists.invgamma_logpdf(x, hp.alpha_s2_km, hp.beta_s2_km),
             [0, hp.beta_s2_km, 1.0, inf]),
            (lambda x: dists.norm_logpdf(x, hp.alpha_nu, hp.beta_nu), [-inf, hp.alpha_nu, inf]),
            (lambda x: dists.invgamma_logpdf(x, hp.alpha_s2h, hp.beta_s2h),
             [0, hp.beta_s2h, 0.1, inf]),
        ]
        for logpdf, breaks in cases:
            self._integrates_to_one(logpdf, breaks)

    def test_level3_priors(self):
        gp = TRUE_GLOBALS
        inf = np.inf
        cases = [
            (lambda x: dists.gamma_logpdf(x, 2.0, 2.0 / gp.a1m), [0, gp.a1m, inf]),
            (lambda x: dists.truncnorm_logpdf(x, gp.a2m, gp.s2_a2m, upper=A2M_UPPER),
             [-inf, gp.a2m, A2M_UPPER]),
            (lambda x: dists.truncnorm_logpdf(x, gp.a4, gp.s2_a4, lower=0.0, upper=100.0),
             [0, gp.a4, 100]),
            (lambda x: dists.truncnorm_logpdf(x, gp.km, gp.s2_km, lower=0.0),
             [0, gp.km, 2 * gp.km, inf]),
            (lambda x: dists.norm_logpdf(x, gp.delta_a2, gp.s2_delta_a2),
             [-inf, gp.delta_a2, inf]),
            (lambda x: dists.lognorm_logpdf(x, gp.nu, gp.rho2),
             [0, math.exp(gp.nu), 0.1, inf]),
        ]
        for logpdf, breaks in cases:
            self._integrates_to_one(logpdf, breaks)

    def test_truncation_normalizer_property(self):
        # truncated mass over [lower, upper] always renormalizes to one
        rng = np.random.default_rng(3)
        for _ in range(5):
            mean = rng.normal(0, 5)
            var = rng.uniform(0.5, 20)
            lower = mean - rng.uniform(0.5, 3) * math.sqrt(var)
            upper = mean + rng.uniform(0.5, 3) * math.sqrt(var)
            self._integrates_to_one(
                lambda x: dists.truncnorm_logpdf(x, mean, var, lower=lower, upper=upper),
                [lower, upper],
            )


# --- joint density -----------------------------------------------------------


def _random_state(rng, data):
    gp_jitter = {
        name: value * math.exp(0.1 * rng.standard_normal())
        if value > 0 else value + 0.1 * rng.standard_normal()
        for name, value in TRUE_GLOBALS.as_dict().items()
    }
    gp = GlobalParams(**gp_jitter)
    countries = {}
    h = {}
    for cd in data:
        countries[cd.name] = draw_country_params(rng, gp)
        for sex in cd.series:
            g = dlc_eval(cd.latent_years, countries[cd.name].theta(sex))
            h[(cd.name, sex)] = g + rng.normal(0, 0.02, len(cd.latent_years))
    return ModelState(globals_=gp, countries=countries, h=h)


def _oracle_log_posterior(state, data, hyper, variant):
    """Full recomputation with scipy.stats densities only."""
    gp, total = state.globals_, 0.0
    for cd in data:
        cp = state.countries[cd.name]
        for sex, sd in cd.series.items():
            h = state.h[(cd.name, sex)]
            obs = h[cd.obs_index(sex)]
            total += float(np.sum(ref_norm(sd.values, obs, cp.s2c)))
            g = dlc_eval(cd.latent_years, cp.theta(sex))
            z = h - g
            innov = np.concatenate(([z[0]], np.diff(z)))
            total += float(np.sum(ref_norm(innov, 0.0, gp.s2h)))
        total += (
            ref_gamma(cp.a1m, 2.0, 2.0 / gp.a1m)
            + ref_truncnorm(cp.a2m, gp.a2m, gp.s2_a2m, upper=A2M_UPPER)
            + ref_gamma(cp.a3m, 2.0, 2.0 / gp.a3m)
            + ref_truncnorm(cp.a4m, gp.a4, gp.s2_a4, 0.0, 100.0)
            + ref_truncnorm(cp.km, gp.km, gp.s2_km, lower=0.0)
            + ref_gamma(cp.a1f, 2.0, 2.0 / gp.a1f)
            + ref_gamma(cp.a3f, 2.0, 2.0 / gp.a3f)
            + ref_truncnorm(cp.a4f, gp.a4, gp.s2_a4, 0.0, 100.0)
            + ref_truncnorm(cp.kf, gp.kf, gp.s2_kf, lower=0.0)
            + ref_norm(cp.delta_a2, gp.delta_a2, gp.s2_delta_a2)
            + ref_lognorm(cp.s2c, gp.nu, gp.rho2)
        )
    if variant is Variant.HIERARCHICAL:
        hp = HYPER
        total += (
            ref_gamma(gp.a1m, hp.alpha_a1m, hp.beta_a1m)
            + ref_norm(gp.a2m, hp.alpha_a2m, hp.beta_a2m)
            + ref_truncnorm(gp.a3m, hp.alpha_a3m, hp.beta_a3m, lower=0.0)
            + ref_norm(gp.a4, hp.alpha_a4, hp.beta_a4)
            + ref_norm(gp.km, hp.alpha_km, hp.beta_km)
            + ref_invgamma(gp.s2_a2m, hp.alpha_s2_a2m, hp.beta_s2_a2m)
            + ref_invgamma(gp.s2_a4, hp.alpha_s2_a4, hp.beta_s2_a4)
            + ref_invgamma(gp.s2_km, hp.alpha_s2_km, hp.beta_s2_km)
            + ref_gamma(gp.a1f, hp.alpha_a1f, hp.beta_a1f)
            + ref_norm(gp.delta_a2, hp.alpha_delta_a2, hp.beta_delta_a2)
            + ref_gamma(gp.a3f, hp.alpha_a3f, hp.beta_a3f)
            + ref_norm(gp.kf, hp.alpha_kf, hp.beta_kf)
            + ref_invgamma(gp.s2_delta_a2, hp.alpha_s2_delta_a2, hp.beta_s2_delta_a2)
            + ref_invgamma(gp.s2_kf, hp.alpha_s2_kf, hp.beta_s2_kf)
            + ref_norm(gp.nu, hp.alpha_nu, hp.beta_nu)
            + ref_invgamma(gp.rho2, hp.alpha_rho2, hp.beta_rho2)
            + ref_invgamma(gp.s2h, hp.alpha_s2h, hp.beta_s2h)
        )
    return total


class TestJointDensity:
    def test_decomposition_at_random_support_points(self, small_corpus):
        series, _, _ = small_corpus
        data = build_country_data(series)
        rng = np.random.default_rng(11)
        for _ in range(100):
            state = _random_state(rng, data)
            got = log_posterior(state, data, HYPER)
            parts = (
                log_likelihood(state, data)
                + log_latent(state, data)
                + sum(log_prior_country(state.countries[cd.name], state.globals_) for cd in data)
                + log_prior_global(state.globals_, HYPER)
            )
            # 1e-10 absolute, loosened to machine precision for huge magnitudes
            assert got == pytest.approx(parts, rel=1e-12, abs=1e-10)
            assert got == pytest.approx(
                _oracle_log_posterior(state, data, HYPER, Variant.HIERARCHICAL),
                abs=max(1e-8, 1e-10 * abs(got)),
            )

    def test_non_hierarchical_omits_global_prior(self, small_corpus):
        series, _, _ = small_corpus
        data = build_country_data(series)
        rng = np.random.default_rng(12)
        state = _random_state(rng, data)
        full = log_posterior(state, data, HYPER, Variant.HIERARCHICAL)
        frozen = log_posterior(state, data, HYPER, Variant.NON_HIERARCHICAL)
        assert frozen == pytest.approx(
            full - log_prior_global(state.globals_, HYPER), abs=1e-9
        )

    def test_off_support_state_is_minus_inf(self, small_corpus):
        series, _, _ = small_corpus
        data = build_country_data(series)
        rng = np.random.default_rng(13)
        state = _random_state(rng, data)
        bad = state.countries[data[0].name]
        state.countries[data[0].name] = CountryParams(
            **{**bad.as_dict(), "a2m": A2M_UPPER + 1.0}
        )
        assert log_posterior(state, data, HYPER) == -np.inf

    def test_latent_residuals_definition(self):
        h = np.array([0.1, 0.2, 0.35])
        g = np.array([0.05, 0.1, 0.2])
        resid = latent_residuals(h, g)
        z = h - g
        assert resid == pytest.approx([z[0], z[1] - z[0], z[2] - z[1]])

    def test_prior_means_on_support(self):
        gp = prior_means(HYPER)
        assert gp.a1m > 0 and gp.a3m > 0 and gp.a1f > 0
        assert gp.s2_a2m > 0 and gp.s2h > 0 and gp.rho2 > 0
        # frozen point has finite global prior density
        assert np.isfinite(log_prior_global(gp, HYPER))

    def test_hyper_overrides(self):
        hp = HYPER.with_overrides({"alpha_a1m": 2.0})
        assert hp.alpha_a1m == 2.0 and hp.beta_a1m == HYPER.beta_a1m
        with pytest.raises(KeyError):
            HYPER.with_overrides({"nope": 1.0})

    def test_build_country_data_alignment(self, small_corpus):
        series, _, _ = small_corpus
        data = build_country_data(series)
        for cd in data:
            for sex, sd in cd.series.items():
                idx = cd.obs_index(sex)
                assert np.array_equal(cd.latent_years[idx], sd.years)
