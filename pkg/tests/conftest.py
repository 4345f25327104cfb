"""Shared fixtures: synthetic data generators drawn from the model itself."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import truncnorm as truncnorm_dist

from asafcast.doublelogistic import dlc_eval
from asafcast.ingest import Sex
from asafcast.model import (
    A2M_UPPER,
    CountryParams,
    GlobalParams,
)
from asafcast.petolopez import AsafSeries

#: Plausible global parameter values used as ground truth in simulations.
TRUE_GLOBALS = GlobalParams(
    a1m=0.16, a2m=24.0, a3m=0.14, a4=38.0, km=0.36,
    s2_a2m=9.0, s2_a4=16.0, s2_km=0.004,
    a1f=0.13, delta_a2=12.0, a3f=0.14, kf=0.20,
    s2_delta_a2=9.0, s2_kf=0.003,
    nu=-10.4, rho2=0.7, s2h=1e-4,
)


def _draw_truncnorm(rng, mean, var, lower=-np.inf, upper=np.inf):
    sd = np.sqrt(var)
    a, b = (lower - mean) / sd, (upper - mean) / sd
    return float(truncnorm_dist.rvs(a, b, loc=mean, scale=sd, random_state=rng))


def draw_country_params(rng, gp: GlobalParams = TRUE_GLOBALS) -> CountryParams:
    """One country's parameters drawn from the hierarchical Level-3 priors."""
    return CountryParams(
        a1m=float(rng.gamma(2.0, gp.a1m / 2.0)),
        a2m=_draw_truncnorm(rng, gp.a2m, gp.s2_a2m, upper=A2M_UPPER),
        a3m=float(rng.gamma(2.0, gp.a3m / 2.0)),
        a4m=_draw_truncnorm(rng, gp.a4, gp.s2_a4, lower=0.0, upper=100.0),
        km=_draw_truncnorm(rng, gp.km, gp.s2_km, lower=0.0),
        a1f=float(rng.gamma(2.0, gp.a1f / 2.0)),
        a3f=float(rng.gamma(2.0, gp.a3f / 2.0)),
        a4f=_draw_truncnorm(rng, gp.a4, gp.s2_a4, lower=0.0, upper=100.0),
        kf=_draw_truncnorm(rng, gp.kf, gp.s2_kf, lower=0.0),
        delta_a2=float(rng.normal(gp.delta_a2, np.sqrt(gp.s2_delta_a2))),
        s2c=float(np.exp(rng.normal(gp.nu, np.sqrt(gp.rho2)))),
    )


def simulate_series(
    rng,
    name: str,
    cp: CountryParams,
    years: np.ndarray,
    s2h: float,
) -> tuple[list[AsafSeries], dict[Sex, np.ndarray]]:
    """Observed series and latent paths for one country under the model."""
    series = []
    latent = {}
    for sex in (Sex.MALE, Sex.FEMALE):
        g = dlc_eval(years, cp.theta(sex))
        h = g + np.cumsum(rng.normal(0.0, np.sqrt(s2h), len(years)))
        y = h + rng.normal(0.0, np.sqrt(cp.s2c), len(years))
        series.append(AsafSeries(name, sex, dict(zip(map(int, years), map(float, y)))))
        latent[sex] = h
    return series, latent


def synthetic_corpus(
    n_countries: int,
    seed: int,
    years: np.ndarray | None = None,
    gp: GlobalParams = TRUE_GLOBALS,
):
    """Full synthetic corpus: (series list, true country params, latent paths)."""
    rng = np.random.default_rng(seed)
    if years is None:
        years = np.arange(1950, 2016)
    all_series: list[AsafSeries] = []
    truth: dict[str, CountryParams] = {}
    latents: dict[tuple[str, Sex], np.ndarray] = {}
    for i in range(n_countries):
        name = f"SYN{i:02d}"
        cp = draw_country_params(rng, gp)
        series, latent = simulate_series(rng, name, cp, years, gp.s2h)
        all_series.extend(series)
        truth[name] = cp
        for sex, h in latent.items():
            latents[(name, sex)] = h
    return all_series, truth, latents


@pytest.fixture(scope="session")
def small_corpus():
    """Three synthetic countries over 1950-2015, with ground truth."""
    return synthetic_corpus(3, seed=20240817)
