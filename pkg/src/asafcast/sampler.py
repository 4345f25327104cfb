"""Posterior sampling by adaptive Metropolis-within-Gibbs.

Scalar parameters move by random-walk Metropolis on unconstrained scales
(log / logit / reflected-log for bounded supports) with Robbins-Monro
step-size adaptation toward 0.44 acceptance, frozen after warmup.  The
latent ASAF path is conditionally Gaussian given everything else (Gaussian
measurement model on a Gaussian random walk), so it is refreshed by an
exact draw from its tridiagonal-precision full conditional rather than by
random-walk proposals; this leaves the posterior invariant and removes the
slowest-mixing block.

Each chain owns an independent deterministic random stream derived from
(seed, chain_index), so identical configurations reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.special import expit, logit

from .dists import (
    gamma_logpdf,
    invgamma_logpdf,
    lognorm_logpdf,
    norm_logpdf,
    truncnorm_logpdf,
)
from .doublelogistic import FitReport, dlc_eval
from .errors import InitializationFailure
from .ingest import Sex
from .model import (
    A2M_UPPER,
    COUNTRY_NAMES,
    GLOBAL_NAMES,
    CountryData,
    CountryParams,
    GlobalParams,
    HyperParams,
    ModelState,
    Variant,
    latent_residuals,
    prior_means,
)

_LOG_2PI = math.log(2.0 * math.pi)

#: Proposal transform per global parameter.
_GLOBAL_TRANSFORMS = {
    "a1m": "log", "a2m": "identity", "a3m": "log", "a4": "identity",
    "km": "identity", "s2_a2m": "log", "s2_a4": "log", "s2_km": "log",
    "a1f": "log", "delta_a2": "identity", "a3f": "log", "kf": "identity",
    "s2_delta_a2": "log", "s2_kf": "log", "nu": "identity", "rho2": "log",
    "s2h": "log",
}

#: Proposal transform per country parameter.
_COUNTRY_TRANSFORMS = {
    "a1m": "log", "a2m": "upper65", "a3m": "log", "a4m": "logit100",
    "km": "log", "a1f": "log", "a3f": "log", "a4f": "logit100",
    "kf": "log", "delta_a2": "identity", "s2c": "log",
}


@dataclass(frozen=True)
class ChainConfig:
    n_chains: int = 3
    iterations: int = 10000
    warmup: int = 2000
    seed: int = 0
    thinning: int = 1

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if not (0 <= self.warmup < self.iterations):
            raise ValueError("need 0 <= warmup < iterations")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.warmup) // self.thinning


@dataclass
class DrawStore:
    """Post-warmup draws for all chains plus run metadata."""

    config: ChainConfig
    variant: Variant
    param_names: list[str]
    chains: list[np.ndarray]          # each (n_draws, n_params)
    acceptance: list[dict[str, float]]
    country_names: list[str] = field(default_factory=list)
    sexes: dict[str, list[str]] = field(default_factory=dict)
    t_end: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.param_names)}

    def parameter(self, name: str) -> np.ndarray:
        """All chains' draws of one scalar, shape (n_chains, n_draws)."""
        j = self._index[name]
        return np.stack([c[:, j] for c in self.chains])

    def flat(self, name: str) -> np.ndarray:
        """All chains pooled, shape (n_chains * n_draws,)."""
        return self.parameter(name).reshape(-1)


# --- proposal transforms ----------------------------------------------------


def _to_u(x: float, kind: str) -> float:
    if kind == "identity":
        return x
    if kind == "log":
        return math.log(x)
    if kind == "upper65":
        return math.log(A2M_UPPER - x)
    if kind == "logit100":
        return float(logit(x / 100.0))
    raise ValueError(kind)


def _from_u(z: float, kind: str) -> float:
    if kind == "identity":
        return z
    if kind == "log":
        return math.exp(z)
    if kind == "upper65":
        return A2M_UPPER - math.exp(z)
    if kind == "logit100":
        return 100.0 * float(expit(z))
    raise ValueError(kind)


def _log_jac(x: float, kind: str) -> float:
    # log |dx/dz| at x; adds to the log target on the unconstrained scale.
    if kind == "identity":
        return 0.0
    if kind == "log":
        return math.log(x)
    if kind == "upper65":
        return math.log(A2M_UPPER - x)
    if kind == "logit100":
        return math.log(x) + math.log(100.0 - x) - math.log(100.0)
    raise ValueError(kind)


class StepSize:
    """Robbins-Monro adapted log step size for one scalar proposal."""

    def __init__(self, target: float = 0.44, initial: float = 0.1):
        self.target = target
        self.log_step = math.log(initial)
        self.count = 0
        self.frozen = False
        self.n_proposed = 0
        self.n_accepted = 0

    @property
    def step(self) -> float:
        return math.exp(self.log_step)

    def update(self, alpha: float) -> None:
        self.n_proposed += 1
        if not self.frozen:
            self.count += 1
            gain = self.count ** -0.6
            self.log_step += gain * (alpha - self.target)
            self.log_step = min(max(self.log_step, -15.0), 5.0)


def mh_step(x: float, logtarget, transform: str, step: StepSize, rng) -> float:
    """One random-walk Metropolis step on the transformed scale.

    ``logtarget`` is the log density in the original parameterization; the
    Jacobian of the transform is applied here.
    """
    z = _to_u(x, transform)
    z_new = z + step.step * rng.standard_normal()
    x_new = _from_u(z_new, transform)
    lp_cur = logtarget(x) + _log_jac(x, transform)
    lp_new = logtarget(x_new) + _log_jac(x_new, transform)
    if lp_new == -np.inf:
        alpha = 0.0
    else:
        alpha = min(1.0, math.exp(min(lp_new - lp_cur, 0.0)))
    accept = rng.random() < alpha
    step.update(alpha)
    if accept:
        step.n_accepted += 1
        return x_new
    return x


def sample_scalar_mh(
    logtarget, x0: float, iterations: int, warmup: int, rng,
    transform: str = "identity",
) -> np.ndarray:
    """Standalone adaptive scalar MH sampler (same kernel the chains use)."""
    step = StepSize()
    x = x0
    out = np.empty(iterations - warmup)
    for i in range(iterations):
        if i == warmup:
            step.frozen = True
        x = mh_step(x, logtarget, transform, step, rng)
        if i >= warmup:
            out[i - warmup] = x
    return out


# --- initialization ---------------------------------------------------------


def _clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def initialize(
    seed: int,
    chain_index: int,
    data: list[CountryData],
    hyper: HyperParams,
    fits: dict[tuple[str, Sex], FitReport] | None = None,
) -> ModelState:
    """Deterministic per-(seed, chain) starting state.

    Country curves start from the least-squares fits when available, jittered
    on the proposal scale; globals start at their prior means, jittered; the
    latent path starts at the observations clamped into (0, 1) and linearly
    interpolated across unobserved years.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, chain_index)))
    fits = fits or {}
    gp0 = prior_means(hyper)

    def jitter(x: float, kind: str, scale: float = 0.05) -> float:
        return _from_u(_to_u(x, kind) + scale * rng.standard_normal(), kind)

    gvals = {}
    for name in GLOBAL_NAMES:
        gvals[name] = jitter(getattr(gp0, name), _GLOBAL_TRANSFORMS[name])
    gp = GlobalParams(**gvals)

    countries: dict[str, CountryParams] = {}
    h: dict[tuple[str, Sex], np.ndarray] = {}
    for cd in data:
        theta = {}
        for sex, prefix in ((Sex.MALE, "m"), (Sex.FEMALE, "f")):
            fit = fits.get((cd.name, sex))
            if fit is not None:
                t = fit.theta_hat
                theta[sex] = (
                    _clip(t.a1, 1e-3, 5.0),
                    _clip(t.a2, -20.0, A2M_UPPER - 1.0),
                    _clip(t.a3, 1e-3, 5.0),
                    _clip(t.a4, 1.0, 99.0),
                    max(t.k, 1e-3),
                )
            else:
                base = (gp0.a1m, gp0.a2m, gp0.a3m, gp0.a4, gp0.km) if sex is Sex.MALE \
                    else (gp0.a1f, gp0.a2m + gp0.delta_a2, gp0.a3f, gp0.a4, gp0.kf)
                theta[sex] = base
        a1m, a2m, a3m, a4m, km = theta[Sex.MALE]
        a1f, a2f, a3f, a4f, kf = theta[Sex.FEMALE]
        raw = {
            "a1m": a1m, "a2m": a2m, "a3m": a3m, "a4m": a4m, "km": km,
            "a1f": a1f, "a3f": a3f, "a4f": a4f, "kf": kf,
            "delta_a2": a2f - a2m,
            "s2c": math.exp(gp0.nu),
        }
        jittered = {
            name: jitter(value, _COUNTRY_TRANSFORMS[name])
            for name, value in raw.items()
        }
        countries[cd.name] = CountryParams(**jittered)
        for sex, sd in cd.series.items():
            clamped = np.clip(sd.values, 1e-4, 1.0 - 1e-4)
            h[(cd.name, sex)] = np.interp(cd.latent_years, sd.years, clamped)
    return ModelState(globals_=gp, countries=countries, h=h)


# --- single chain -----------------------------------------------------------

#: Which sexes' latent paths a country-parameter update touches.
_AFFECTED = {
    "a1m": (Sex.MALE,), "a2m": (Sex.MALE, Sex.FEMALE), "a3m": (Sex.MALE,),
    "a4m": (Sex.MALE,), "km": (Sex.MALE,),
    "a1f": (Sex.FEMALE,), "a3f": (Sex.FEMALE,), "a4f": (Sex.FEMALE,),
    "kf": (Sex.FEMALE,), "delta_a2": (Sex.FEMALE,),
}


class Chain:
    """Mutable state and kernel for one MCMC chain."""

    def __init__(
        self,
        data: list[CountryData],
        hyper: HyperParams,
        variant: Variant,
        state: ModelState,
        rng: np.random.Generator,
    ):
        self.data = {cd.name: cd for cd in data}
        self.order = [cd.name for cd in data]
        self.hyper = hyper
        self.variant = variant
        self.rng = rng
        self.gp = dict(state.globals_.as_dict())
        self.cp = {name: dict(state.countries[name].as_dict()) for name in self.order}
        self.h = {key: np.array(v) for key, v in state.h.items()}
        # caches: drift path, latent residual sum of squares, observation SSE
        self.gpath: dict[tuple[str, Sex], np.ndarray] = {}
        self.lat_rss: dict[tuple[str, Sex], float] = {}
        self.obs_sse: dict[tuple[str, Sex], float] = {}
        for cname in self.order:
            cd = self.data[cname]
            for sex in cd.series:
                self._refresh_series(cname, sex)
        self.steps: dict[str, StepSize] = {}

    # -- caches --

    def _theta(self, cname: str, sex: Sex, override: dict | None = None) -> tuple:
        p = self.cp[cname] if override is None else {**self.cp[cname], **override}
        if sex is Sex.MALE:
            return (p["a1m"], p["a2m"], p["a3m"], p["a4m"], p["km"])
        return (p["a1f"], p["a2m"] + p["delta_a2"], p["a3f"], p["a4f"], p["kf"])

    def _refresh_series(self, cname: str, sex: Sex) -> None:
        cd = self.data[cname]
        key = (cname, sex)
        gpath = dlc_eval(cd.latent_years, np.array(self._theta(cname, sex)))
        resid = latent_residuals(self.h[key], gpath)
        self.gpath[key] = gpath
        self.lat_rss[key] = float(resid @ resid)
        sd = cd.series[sex]
        err = sd.values - self.h[key][cd.obs_index(sex)]
        self.obs_sse[key] = float(err @ err)

    def _lat_term(self, rss: float, n: int, s2h: float) -> float:
        return -0.5 * n * (_LOG_2PI + math.log(s2h)) - 0.5 * rss / s2h

    def _step(self, name: str) -> StepSize:
        step = self.steps.get(name)
        if step is None:
            step = self.steps[name] = StepSize()
        return step

    def freeze_adaptation(self) -> None:
        for step in self.steps.values():
            step.frozen = True

    # -- country parameter updates --

    def _country_prior_term(self, cname: str, pname: str, value: float) -> float:
        g = self.gp
        if pname == "a1m":
            return gamma_logpdf(value, 2.0, 2.0 / g["a1m"])
        if pname == "a2m":
            return truncnorm_logpdf(value, g["a2m"], g["s2_a2m"], upper=A2M_UPPER)
        if pname == "a3m":
            return gamma_logpdf(value, 2.0, 2.0 / g["a3m"])
        if pname in ("a4m", "a4f"):
            return truncnorm_logpdf(value, g["a4"], g["s2_a4"], lower=0.0, upper=100.0)
        if pname == "km":
            return truncnorm_logpdf(value, g["km"], g["s2_km"], lower=0.0)
        if pname == "a1f":
            return gamma_logpdf(value, 2.0, 2.0 / g["a1f"])
        if pname == "a3f":
            return gamma_logpdf(value, 2.0, 2.0 / g["a3f"])
        if pname == "kf":
            return truncnorm_logpdf(value, g["kf"], g["s2_kf"], lower=0.0)
        if pname == "delta_a2":
            return norm_logpdf(value, g["delta_a2"], g["s2_delta_a2"])
        if pname == "s2c":
            return lognorm_logpdf(value, g["nu"], g["rho2"])
        raise KeyError(pname)

    def _update_theta_scalar(self, cname: str, pname: str) -> None:
        cd = self.data[cname]
        sexes = [s for s in _AFFECTED[pname] if s in cd.series]
        s2h = self.gp["s2h"]

        def logtarget(value: float) -> float:
            lp = self._country_prior_term(cname, pname, value)
            if lp == -np.inf:
                return lp
            for sex in sexes:
                key = (cname, sex)
                if value == self.cp[cname][pname]:
                    rss = self.lat_rss[key]
                else:
                    gpath = dlc_eval(
                        cd.latent_years, np.array(self._theta(cname, sex, {pname: value}))
                    )
                    resid = latent_residuals(self.h[key], gpath)
                    rss = float(resid @ resid)
                lp += self._lat_term(rss, len(cd.latent_years), s2h)
            return lp

        old = self.cp[cname][pname]
        new = mh_step(
            old, logtarget, _COUNTRY_TRANSFORMS[pname],
            self._step(f"{pname}[{cname}]"), self.rng,
        )
        if new != old:
            self.cp[cname][pname] = new
            for sex in sexes:
                self._refresh_series(cname, sex)

    def _update_s2c(self, cname: str) -> None:
        cd = self.data[cname]
        terms = [
            (self.obs_sse[(cname, sex)], len(cd.series[sex].years))
            for sex in cd.series
        ]

        def logtarget(value: float) -> float:
            lp = self._country_prior_term(cname, "s2c", value)
            for sse, n in terms:
                lp += -0.5 * n * (_LOG_2PI + math.log(value)) - 0.5 * sse / value
            return lp

        self.cp[cname]["s2c"] = mh_step(
            self.cp[cname]["s2c"], logtarget, "log",
            self._step(f"s2c[{cname}]"), self.rng,
        )

    # -- latent path update (exact Gaussian full conditional) --

    def _update_h(self, cname: str, sex: Sex) -> None:
        cd = self.data[cname]
        key = (cname, sex)
        s2h = self.gp["s2h"]
        s2c = self.cp[cname]["s2c"]
        gpath = self.gpath[key]
        obs = cd.obs_index(sex)
        y = cd.series[sex].values
        n = len(cd.latent_years)

        # precision and canonical mean of z = h - drift path
        diag = np.full(n, 1.0 / s2h)
        diag[:-1] += 1.0 / s2h
        diag[obs] += 1.0 / s2c
        ab = np.zeros((2, n))
        ab[0, 1:] = -1.0 / s2h
        ab[1, :] = diag
        b = np.zeros(n)
        b[obs] += (y - gpath[obs]) / s2c

        chol = cholesky_banded(ab, lower=False)
        mean = cho_solve_banded((chol, False), b)
        eps = self.rng.standard_normal(n)
        z = mean + solve_banded((0, 1), chol, eps)
        self.h[key] = gpath + z
        resid = np.concatenate(([z[0]], np.diff(z)))
        self.lat_rss[key] = float(resid @ resid)
        err = y - self.h[key][obs]
        self.obs_sse[key] = float(err @ err)

    # -- global parameter updates --

    def _global_prior_term(self, name: str, value: float) -> float:
        hp = self.hyper
        if name == "a1m":
            return gamma_logpdf(value, hp.alpha_a1m, hp.beta_a1m)
        if name == "a2m":
            return norm_logpdf(value, hp.alpha_a2m, hp.beta_a2m)
        if name == "a3m":
            return truncnorm_logpdf(value, hp.alpha_a3m, hp.beta_a3m, lower=0.0)
        if name == "a4":
            return norm_logpdf(value, hp.alpha_a4, hp.beta_a4)
        if name == "km":
            return norm_logpdf(value, hp.alpha_km, hp.beta_km)
        if name == "s2_a2m":
            return invgamma_logpdf(value, hp.alpha_s2_a2m, hp.beta_s2_a2m)
        if name == "s2_a4":
            return invgamma_logpdf(value, hp.alpha_s2_a4, hp.beta_s2_a4)
        if name == "s2_km":
            return invgamma_logpdf(value, hp.alpha_s2_km, hp.beta_s2_km)
        if name == "a1f":
            return gamma_logpdf(value, hp.alpha_a1f, hp.beta_a1f)
        if name == "delta_a2":
            return norm_logpdf(value, hp.alpha_delta_a2, hp.beta_delta_a2)
        if name == "a3f":
            return gamma_logpdf(value, hp.alpha_a3f, hp.beta_a3f)
        if name == "kf":
            return norm_logpdf(value, hp.alpha_kf, hp.beta_kf)
        if name == "s2_delta_a2":
            return invgamma_logpdf(value, hp.alpha_s2_delta_a2, hp.beta_s2_delta_a2)
        if name == "s2_kf":
            return invgamma_logpdf(value, hp.alpha_s2_kf, hp.beta_s2_kf)
        if name == "nu":
            return norm_logpdf(value, hp.alpha_nu, hp.beta_nu)
        if name == "rho2":
            return invgamma_logpdf(value, hp.alpha_rho2, hp.beta_rho2)
        if name == "s2h":
            return invgamma_logpdf(value, hp.alpha_s2h, hp.beta_s2h)
        raise KeyError(name)

    def _global_children_term(self, name: str, value: float) -> float:
        """Level-3 contribution of all country parameters tied to one global."""
        g = {**self.gp, name: value}
        total = 0.0
        if name == "s2h":
            for key, rss in self.lat_rss.items():
                cd = self.data[key[0]]
                total += self._lat_term(rss, len(cd.latent_years), value)
            return total
        for cname in self.order:
            p = self.cp[cname]
            if name == "a1m":
                total += gamma_logpdf(p["a1m"], 2.0, 2.0 / value)
            elif name in ("a2m", "s2_a2m"):
                total += truncnorm_logpdf(p["a2m"], g["a2m"], g["s2_a2m"], upper=A2M_UPPER)
            elif name == "a3m":
                total += gamma_logpdf(p["a3m"], 2.0, 2.0 / value)
            elif name in ("a4", "s2_a4"):
                total += truncnorm_logpdf(p["a4m"], g["a4"], g["s2_a4"], lower=0.0, upper=100.0)
                total += truncnorm_logpdf(p["a4f"], g["a4"], g["s2_a4"], lower=0.0, upper=100.0)
            elif name in ("km", "s2_km"):
                total += truncnorm_logpdf(p["km"], g["km"], g["s2_km"], lower=0.0)
            elif name == "a1f":
                total += gamma_logpdf(p["a1f"], 2.0, 2.0 / value)
            elif name in ("delta_a2", "s2_delta_a2"):
                total += norm_logpdf(p["delta_a2"], g["delta_a2"], g["s2_delta_a2"])
            elif name == "a3f":
                total += gamma_logpdf(p["a3f"], 2.0, 2.0 / value)
            elif name in ("kf", "s2_kf"):
                total += truncnorm_logpdf(p["kf"], g["kf"], g["s2_kf"], lower=0.0)
            elif name in ("nu", "rho2"):
                total += lognorm_logpdf(p["s2c"], g["nu"], g["rho2"])
            else:
                raise KeyError(name)
            if total == -np.inf:
                return total
        return total

    def _update_global(self, name: str) -> None:
        def logtarget(value: float) -> float:
            lp = self._global_prior_term(name, value)
            if lp == -np.inf:
                return lp
            return lp + self._global_children_term(name, value)

        self.gp[name] = mh_step(
            self.gp[name], logtarget, _GLOBAL_TRANSFORMS[name],
            self._step(name), self.rng,
        )

    # -- one full sweep --

    def sweep(self) -> None:
        for cname in self.order:
            for pname in _AFFECTED:
                self._update_theta_scalar(cname, pname)
            self._update_s2c(cname)
        for cname in self.order:
            for sex in self.data[cname].series:
                self._update_h(cname, sex)
        if self.variant is Variant.HIERARCHICAL:
            for name in GLOBAL_NAMES:
                self._update_global(name)

    # -- views --

    def state(self) -> ModelState:
        return ModelState(
            globals_=GlobalParams(**self.gp),
            countries={c: CountryParams(**self.cp[c]) for c in self.order},
            h={key: np.array(v) for key, v in self.h.items()},
        )

    def record(self) -> np.ndarray:
        values = [self.gp[name] for name in GLOBAL_NAMES]
        for cname in self.order:
            values.extend(self.cp[cname][p] for p in COUNTRY_NAMES)
        for cname in self.order:
            for sex in sorted(self.data[cname].series, key=lambda s: s.value):
                values.append(self.h[(cname, sex)][-1])
        return np.array(values)

    def acceptance_rates(self) -> dict[str, float]:
        return {
            name: step.n_accepted / step.n_proposed
            for name, step in sorted(self.steps.items())
            if step.n_proposed
        }


def param_names(data: list[CountryData]) -> list[str]:
    names = list(GLOBAL_NAMES)
    for cd in data:
        names.extend(f"{p}[{cd.name}]" for p in COUNTRY_NAMES)
    for cd in data:
        for sex in sorted(cd.series, key=lambda s: s.value):
            names.append(f"h_end[{cd.name},{sex.value}]")
    return names


def _run_one_chain(args) -> tuple[np.ndarray, dict[str, float]]:
    config, data, hyper, variant, fits, chain_index = args
    chain = None
    for attempt in range(10):
        candidate = initialize(config.seed + attempt, chain_index, data, hyper, fits)
        if variant is Variant.NON_HIERARCHICAL:
            candidate.globals_ = prior_means(hyper)
        trial = Chain(data, hyper, variant, candidate, _chain_rng(config.seed, chain_index))
        if _finite_start(trial):
            chain = trial
            break
    if chain is None:
        raise InitializationFailure("no finite-density starting state found")
    draws = np.empty((config.n_draws, len(param_names(data))))
    row = 0
    for i in range(1, config.iterations + 1):
        if i == config.warmup + 1:
            chain.freeze_adaptation()
        chain.sweep()
        if i > config.warmup and (i - config.warmup) % config.thinning == 0:
            draws[row] = chain.record()
            row += 1
    return draws[:row], chain.acceptance_rates()


def _chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, chain_index)))


def _finite_start(chain: Chain) -> bool:
    from .model import log_posterior

    return log_posterior(chain.state(), list(chain.data.values()), chain.hyper,
                         chain.variant) > -np.inf


def run_chains(
    config: ChainConfig,
    data: list[CountryData],
    hyper: HyperParams | None = None,
    variant: Variant = Variant.HIERARCHICAL,
    fits: dict[tuple[str, Sex], FitReport] | None = None,
    n_jobs: int = 1,
) -> DrawStore:
    """Run all chains and collect post-warmup draws.

    Chains are independent; with ``n_jobs > 1`` they run in separate
    processes.  Results are identical either way.
    """
    hyper = hyper or HyperParams()
    jobs = [
        (config, data, hyper, variant, fits, chain_index)
        for chain_index in range(config.n_chains)
    ]
    if n_jobs > 1 and config.n_chains > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(n_jobs, config.n_chains)
        ) as pool:
            results = list(pool.map(_run_one_chain, jobs))
    else:
        results = [_run_one_chain(job) for job in jobs]
    return DrawStore(
        config=config,
        variant=variant,
        param_names=param_names(data),
        chains=[draws for draws, _ in results],
        acceptance=[acc for _, acc in results],
        country_names=[cd.name for cd in data],
        sexes={cd.name: sorted(s.value for s in cd.series) for cd in data},
        t_end={cd.name: cd.t_end for cd in data},
    )
