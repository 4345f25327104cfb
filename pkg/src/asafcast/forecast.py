"""Posterior-predictive projection of ASAF trajectories and quantile fans.

Each retained posterior draw is continued forward: the latent level follows
the random walk with the double-logistic increment as drift, and a
measurement draw is layered on top.  Negative values are set to zero at
each step, latent level first, then the observed value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .doublelogistic import EPOCH_YEAR
from .errors import InsufficientDraws, InvalidHorizon, MissingQuantile, ParseError
from .ingest import Sex
from .sampler import DrawStore

#: Probability levels of the reported fan, in percent.
FAN_LEVELS = (2.5, 10.0, 50.0, 90.0, 97.5)

_SERIES = ("true", "observed")


@dataclass(frozen=True)
class TrajectorySet:
    """Simulated future paths per (country, sex): draws x years matrices."""

    years: np.ndarray
    h: dict[tuple[str, Sex], np.ndarray]
    y: dict[tuple[str, Sex], np.ndarray]
    source_seed: int


@dataclass(frozen=True)
class QuantileFan:
    """Fan quantiles: (country, sex, series, year) -> levels in FAN_LEVELS order."""

    years: np.ndarray
    quantiles: dict[tuple[str, Sex, str], np.ndarray]  # (n_years, n_levels)


def _dlc_matrix(years: np.ndarray, a1, a2, a3, a4, k) -> np.ndarray:
    """Curve values for per-draw parameter vectors, shape (n_draws, n_years)."""
    u = years[None, :] - EPOCH_YEAR
    return k[:, None] * (
        expit(a1[:, None] * (u - a2[:, None]))
        - expit(a3[:, None] * (u - a2[:, None] - a4[:, None]))
    )


def project(
    store: DrawStore,
    horizon: tuple[int, int],
    max_draws: int | None = None,
) -> TrajectorySet:
    """Simulate trajectories over ``horizon`` (inclusive year range).

    Simulation always starts at the year after the latent span ends, even
    when the requested horizon starts later, so the path law does not depend
    on the reporting window.  Deterministic given (store, horizon).
    """
    start, end = horizon
    if start > end:
        raise InvalidHorizon(f"empty horizon {start}..{end}")
    last_data_year = max(store.t_end.values())
    if start <= last_data_year:
        raise InvalidHorizon(
            f"horizon starts at {start}, inside the data span ending {last_data_year}"
        )
    out_years = np.arange(start, end + 1)
    seed = store.config.seed
    s2h_all = store.flat("s2h")
    n_total = len(s2h_all)

    keep = np.arange(n_total)
    if max_draws is not None and max_draws < n_total:
        sub_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
        keep = np.sort(sub_rng.choice(n_total, size=max_draws, replace=False))
    s2h = s2h_all[keep]

    h_paths: dict[tuple[str, Sex], np.ndarray] = {}
    y_paths: dict[tuple[str, Sex], np.ndarray] = {}
    for ci, cname in enumerate(store.country_names):
        t_end = store.t_end[cname]
        sim_years = np.arange(t_end, end + 1)  # includes the anchor year
        s2c = store.flat(f"s2c[{cname}]")[keep]
        for sex_label in store.sexes[cname]:
            sex = Sex(sex_label)
            if sex is Sex.MALE:
                theta = tuple(
                    store.flat(f"{p}[{cname}]")[keep]
                    for p in ("a1m", "a2m", "a3m", "a4m", "km")
                )
            else:
                a2f = (
                    store.flat(f"a2m[{cname}]")[keep]
                    + store.flat(f"delta_a2[{cname}]")[keep]
                )
                theta = (
                    store.flat(f"a1f[{cname}]")[keep],
                    a2f,
                    store.flat(f"a3f[{cname}]")[keep],
                    store.flat(f"a4f[{cname}]")[keep],
                    store.flat(f"kf[{cname}]")[keep],
                )
            g = _dlc_matrix(sim_years, *theta)
            dg = np.diff(g, axis=1)

            rng = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(2, ci, sex.value == "female"))
            )
            n = len(keep)
            h = store.flat(f"h_end[{cname},{sex.value}]")[keep].copy()
            n_steps = len(sim_years) - 1
            h_mat = np.empty((n, n_steps))
            y_mat = np.empty((n, n_steps))
            sd_h = np.sqrt(s2h)
            sd_c = np.sqrt(s2c)
            for j in range(n_steps):
                h = h + dg[:, j] + sd_h * rng.standard_normal(n)
                np.maximum(h, 0.0, out=h)
                y = h + sd_c * rng.standard_normal(n)
                np.maximum(y, 0.0, out=y)
                h_mat[:, j] = h
                y_mat[:, j] = y
            col0 = start - (t_end + 1)
            h_paths[(cname, sex)] = h_mat[:, col0:]
            y_paths[(cname, sex)] = y_mat[:, col0:]
    return TrajectorySet(years=out_years, h=h_paths, y=y_paths, source_seed=seed)


def quantile_fan(trajectories: TrajectorySet) -> QuantileFan:
    """Median-unbiased empirical quantiles per year, monotone across levels."""
    probs = np.array(FAN_LEVELS) / 100.0
    quantiles: dict[tuple[str, Sex, str], np.ndarray] = {}
    for series, paths in (("true", trajectories.h), ("observed", trajectories.y)):
        for (cname, sex), mat in paths.items():
            if mat.shape[0] < 100:
                raise InsufficientDraws(
                    f"{cname}/{sex.value}: {mat.shape[0]} trajectories < 100"
                )
            q = np.quantile(mat, probs, axis=0, method="median_unbiased").T
            np.maximum.accumulate(q, axis=1, out=q)  # guard against fp ties
            quantiles[(cname, sex, series)] = q
    return QuantileFan(years=np.array(trajectories.years), quantiles=quantiles)


# --- projections.csv I/O ----------------------------------------------------

_COLUMNS = ["country", "sex", "series", "year", "q025", "q10", "q50", "q90", "q975"]


def write_projections_csv(path: str | Path, fan: QuantileFan) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for (cname, sex, series) in sorted(
            fan.quantiles, key=lambda k: (k[0], k[1].value, k[2])
        ):
            q = fan.quantiles[(cname, sex, series)]
            for i, year in enumerate(fan.years):
                writer.writerow(
                    [cname, sex.value, series, int(year)]
                    + [repr(float(v)) for v in q[i]]
                )


def read_projections_csv(path: str | Path) -> QuantileFan:
    """Load a fan file, revalidating quantile monotonicity."""
    rows: dict[tuple[str, Sex, str], dict[int, list[float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _COLUMNS:
            raise ParseError(f"{path}: expected columns {_COLUMNS}")
        for rec in reader:
            key = (rec["country"], Sex(rec["sex"]), rec["series"])
            values = [float(rec[c]) for c in ("q025", "q10", "q50", "q90", "q975")]
            if any(b < a for a, b in zip(values, values[1:])):
                raise MissingQuantile(f"non-monotone quantiles at {key}, {rec['year']}")
            rows.setdefault(key, {})[int(rec["year"])] = values
    years = sorted({year for by_year in rows.values() for year in by_year})
    quantiles = {
        key: np.array([by_year[year] for year in years])
        for key, by_year in rows.items()
    }
    return QuantileFan(years=np.array(years), quantiles=quantiles)
