"""Joint log-density of the four-level hierarchical model.

Level 1 is a Gaussian measurement model for observed ASAF around the latent
truth; Level 2 evolves the latent truth as a random walk whose drift is the
double-logistic increment; Level 3 draws country parameters around global
ones (with the female a2 tied to the male a2 through a country offset and a
shared a4 location for both sexes); Level 4 places fixed-constant priors on
the global parameters.

All component functions return -inf off the support, so the posterior
carries its own support indicator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .dists import (
    gamma_logpdf,
    invgamma_logpdf,
    lognorm_logpdf,
    norm_logpdf,
    truncnorm_logpdf,
)
from .doublelogistic import DlcParams, dlc_eval
from .ingest import Sex
from .petolopez import AsafSeries

_LOG_2PI = math.log(2.0 * math.pi)

#: Upper truncation of the male a2 country parameter.
A2M_UPPER = 65.0


class Variant(str, enum.Enum):
    HIERARCHICAL = "bayes"
    NON_HIERARCHICAL = "bayes-s"


@dataclass(frozen=True)
class HyperParams:
    """Fixed constants of the Level-4 priors.

    Normal entries are (mean, variance); Gamma entries are (shape, rate);
    inverse-Gamma entries are (shape, scale).
    """

    alpha_a1m: float = 1.477
    beta_a1m: float = 9.423
    alpha_a2m: float = 24.362
    beta_a2m: float = 12.488
    alpha_a3m: float = 1.031
    beta_a3m: float = 7.378
    alpha_a4: float = 38.362
    beta_a4: float = 19.058
    alpha_km: float = 0.362
    beta_km: float = 0.255
    alpha_s2_a2m: float = 2.0
    beta_s2_a2m: float = 12.488**2
    alpha_s2_a4: float = 2.0
    beta_s2_a4: float = 19.058**2
    alpha_s2_km: float = 2.0
    beta_s2_km: float = 0.255**2
    alpha_a1f: float = 2.093
    beta_a1f: float = 16.302
    alpha_delta_a2: float = 12.080
    beta_delta_a2: float = 11.140
    alpha_a3f: float = 1.031
    beta_a3f: float = 7.378
    alpha_kf: float = 0.362
    beta_kf: float = 0.255
    alpha_s2_delta_a2: float = 2.0
    beta_s2_delta_a2: float = 11.0**2
    alpha_s2_kf: float = 2.0
    beta_s2_kf: float = 0.255**2
    alpha_nu: float = -10.414
    beta_nu: float = 1.186**2
    alpha_rho2: float = 2.0
    beta_rho2: float = 1.186**2
    alpha_s2h: float = 2.0
    beta_s2h: float = 0.01**2

    def with_overrides(self, overrides: dict[str, float]) -> "HyperParams":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown hyperparameter keys: {sorted(unknown)}")
        return replace(self, **overrides)


#: Order of the global parameter vector everywhere (draws, diagnostics, reports).
GLOBAL_NAMES = (
    "a1m", "a2m", "a3m", "a4", "km",
    "s2_a2m", "s2_a4", "s2_km",
    "a1f", "delta_a2", "a3f", "kf",
    "s2_delta_a2", "s2_kf",
    "nu", "rho2", "s2h",
)


@dataclass(frozen=True)
class GlobalParams:
    a1m: float
    a2m: float
    a3m: float
    a4: float
    km: float
    s2_a2m: float
    s2_a4: float
    s2_km: float
    a1f: float
    delta_a2: float
    a3f: float
    kf: float
    s2_delta_a2: float
    s2_kf: float
    nu: float
    rho2: float
    s2h: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in GLOBAL_NAMES}


def prior_means(hyper: HyperParams) -> GlobalParams:
    """Level-4 prior means: Gamma mean shape/rate, Normal mean, inverse-Gamma
    mean scale/(shape-1).  Used as the freeze point of the non-hierarchical
    variant and as an initialization anchor."""
    return GlobalParams(
        a1m=hyper.alpha_a1m / hyper.beta_a1m,
        a2m=hyper.alpha_a2m,
        a3m=hyper.alpha_a3m,
        a4=hyper.alpha_a4,
        km=hyper.alpha_km,
        s2_a2m=hyper.beta_s2_a2m / (hyper.alpha_s2_a2m - 1.0),
        s2_a4=hyper.beta_s2_a4 / (hyper.alpha_s2_a4 - 1.0),
        s2_km=hyper.beta_s2_km / (hyper.alpha_s2_km - 1.0),
        a1f=hyper.alpha_a1f / hyper.beta_a1f,
        delta_a2=hyper.alpha_delta_a2,
        a3f=hyper.alpha_a3f,
        kf=hyper.alpha_kf,
        s2_delta_a2=hyper.beta_s2_delta_a2 / (hyper.alpha_s2_delta_a2 - 1.0),
        s2_kf=hyper.beta_s2_kf / (hyper.alpha_s2_kf - 1.0),
        nu=hyper.alpha_nu,
        rho2=hyper.beta_rho2 / (hyper.alpha_rho2 - 1.0),
        s2h=hyper.beta_s2h / (hyper.alpha_s2h - 1.0),
    )


#: Order of the per-country parameter vector.
COUNTRY_NAMES = (
    "a1m", "a2m", "a3m", "a4m", "km",
    "a1f", "a3f", "a4f", "kf", "delta_a2", "s2c",
)


@dataclass(frozen=True)
class CountryParams:
    a1m: float
    a2m: float
    a3m: float
    a4m: float
    km: float
    a1f: float
    a3f: float
    a4f: float
    kf: float
    delta_a2: float
    s2c: float

    @property
    def a2f(self) -> float:
        return self.a2m + self.delta_a2

    def theta(self, sex: Sex) -> DlcParams:
        if sex is Sex.MALE:
            return DlcParams(self.a1m, self.a2m, self.a3m, self.a4m, self.km)
        return DlcParams(self.a1f, self.a2f, self.a3f, self.a4f, self.kf)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in COUNTRY_NAMES}


@dataclass(frozen=True)
class SeriesData:
    """Observed years/values for one (country, sex), as aligned arrays."""

    years: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class CountryData:
    """Per-country modeling input: both observed series plus the latent span."""

    name: str
    t0: int
    t_end: int
    series: dict[Sex, SeriesData]

    @property
    def latent_years(self) -> np.ndarray:
        return np.arange(self.t0, self.t_end + 1)

    def obs_index(self, sex: Sex) -> np.ndarray:
        """Positions of the observed years inside the latent span."""
        return self.series[sex].years - self.t0


def build_country_data(
    series: list[AsafSeries], t_end: int | None = None
) -> list[CountryData]:
    """Group observed ASAF series into per-country modeling inputs."""
    by_country: dict[str, dict[Sex, AsafSeries]] = {}
    for s in series:
        if s.values:
            by_country.setdefault(s.country, {})[s.sex] = s
    out = []
    for name in sorted(by_country):
        sexes = by_country[name]
        t0 = min(min(s.years) for s in sexes.values())
        last = max(max(s.years) for s in sexes.values())
        end = t_end if t_end is not None else last
        data = {}
        for sex, s in sexes.items():
            years = np.array(s.years, int)
            data[sex] = SeriesData(years, np.array([s.values[t] for t in years]))
        out.append(CountryData(name, t0, end, data))
    return out


@dataclass
class ModelState:
    """One point in the posterior: globals, country parameters, latent paths."""

    globals_: GlobalParams
    countries: dict[str, CountryParams]
    h: dict[tuple[str, Sex], np.ndarray] = field(default_factory=dict)


# --- components -------------------------------------------------------------


def _normal_sum(residuals: np.ndarray, var: float) -> float:
    if var <= 0.0:
        return -np.inf
    n = residuals.size
    return -0.5 * n * (_LOG_2PI + math.log(var)) - 0.5 * float(residuals @ residuals) / var


def latent_residuals(h: np.ndarray, gpath: np.ndarray) -> np.ndarray:
    """Innovations of the drifting random walk: the start-year deviation from
    the curve, then each increment minus the curve increment."""
    z = h - gpath
    return np.concatenate(([z[0]], np.diff(z)))


def log_likelihood(state: ModelState, data: list[CountryData]) -> float:
    total = 0.0
    for cd in data:
        cp = state.countries[cd.name]
        for sex, sd in cd.series.items():
            h = state.h[(cd.name, sex)]
            resid = sd.values - h[cd.obs_index(sex)]
            total += _normal_sum(resid, cp.s2c)
            if total == -np.inf:
                return -np.inf
    return total


def log_latent(state: ModelState, data: list[CountryData]) -> float:
    s2h = state.globals_.s2h
    total = 0.0
    for cd in data:
        cp = state.countries[cd.name]
        years = cd.latent_years
        for sex in cd.series:
            gpath = dlc_eval(years, cp.theta(sex))
            resid = latent_residuals(state.h[(cd.name, sex)], gpath)
            total += _normal_sum(resid, s2h)
            if total == -np.inf:
                return -np.inf
    return total


def log_prior_country(cp: CountryParams, gp: GlobalParams) -> float:
    terms = (
        gamma_logpdf(cp.a1m, 2.0, 2.0 / gp.a1m) if gp.a1m > 0 else -np.inf,
        truncnorm_logpdf(cp.a2m, gp.a2m, gp.s2_a2m, upper=A2M_UPPER),
        gamma_logpdf(cp.a3m, 2.0, 2.0 / gp.a3m) if gp.a3m > 0 else -np.inf,
        truncnorm_logpdf(cp.a4m, gp.a4, gp.s2_a4, lower=0.0, upper=100.0),
        truncnorm_logpdf(cp.km, gp.km, gp.s2_km, lower=0.0),
        gamma_logpdf(cp.a1f, 2.0, 2.0 / gp.a1f) if gp.a1f > 0 else -np.inf,
        gamma_logpdf(cp.a3f, 2.0, 2.0 / gp.a3f) if gp.a3f > 0 else -np.inf,
        truncnorm_logpdf(cp.a4f, gp.a4, gp.s2_a4, lower=0.0, upper=100.0),
        truncnorm_logpdf(cp.kf, gp.kf, gp.s2_kf, lower=0.0),
        norm_logpdf(cp.delta_a2, gp.delta_a2, gp.s2_delta_a2),
        lognorm_logpdf(cp.s2c, gp.nu, gp.rho2),
    )
    total = 0.0
    for t in terms:
        if t == -np.inf:
            return -np.inf
        total += t
    return total


def log_prior_global(gp: GlobalParams, hyper: HyperParams) -> float:
    terms = (
        gamma_logpdf(gp.a1m, hyper.alpha_a1m, hyper.beta_a1m),
        norm_logpdf(gp.a2m, hyper.alpha_a2m, hyper.beta_a2m),
        # a3m feeds a Gamma rate at Level 3, so its Normal prior is
        # restricted to the positive axis.
        truncnorm_logpdf(gp.a3m, hyper.alpha_a3m, hyper.beta_a3m, lower=0.0),
        norm_logpdf(gp.a4, hyper.alpha_a4, hyper.beta_a4),
        norm_logpdf(gp.km, hyper.alpha_km, hyper.beta_km),
        invgamma_logpdf(gp.s2_a2m, hyper.alpha_s2_a2m, hyper.beta_s2_a2m),
        invgamma_logpdf(gp.s2_a4, hyper.alpha_s2_a4, hyper.beta_s2_a4),
        invgamma_logpdf(gp.s2_km, hyper.alpha_s2_km, hyper.beta_s2_km),
        gamma_logpdf(gp.a1f, hyper.alpha_a1f, hyper.beta_a1f),
        norm_logpdf(gp.delta_a2, hyper.alpha_delta_a2, hyper.beta_delta_a2),
        gamma_logpdf(gp.a3f, hyper.alpha_a3f, hyper.beta_a3f),
        norm_logpdf(gp.kf, hyper.alpha_kf, hyper.beta_kf),
        invgamma_logpdf(gp.s2_delta_a2, hyper.alpha_s2_delta_a2, hyper.beta_s2_delta_a2),
        invgamma_logpdf(gp.s2_kf, hyper.alpha_s2_kf, hyper.beta_s2_kf),
        norm_logpdf(gp.nu, hyper.alpha_nu, hyper.beta_nu),
        invgamma_logpdf(gp.rho2, hyper.alpha_rho2, hyper.beta_rho2),
        invgamma_logpdf(gp.s2h, hyper.alpha_s2h, hyper.beta_s2h),
    )
    total = 0.0
    for t in terms:
        if t == -np.inf:
            return -np.inf
        total += t
    return total


def log_posterior(
    state: ModelState,
    data: list[CountryData],
    hyper: HyperParams,
    variant: Variant = Variant.HIERARCHICAL,
) -> float:
    total = log_likelihood(state, data)
    if total == -np.inf:
        return -np.inf
    part = log_latent(state, data)
    if part == -np.inf:
        return -np.inf
    total += part
    for cd in data:
        part = log_prior_country(state.countries[cd.name], state.globals_)
        if part == -np.inf:
            return -np.inf
        total += part
    if variant is Variant.HIERARCHICAL:
        part = log_prior_global(state.globals_, hyper)
        if part == -np.inf:
            return -np.inf
        total += part
    return total
