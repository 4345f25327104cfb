"""Out-of-sample validation: scenario splits, point and interval accuracy,
proper scoring, and baseline/subgroup comparisons.

Point forecasts are posterior medians of the observed-ASAF predictive
distribution.  MAE pools all (country, year) residuals with a single
denominator; CRPS averages within country first and then across countries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyTraining,
    EmptyValidation,
    InsufficientDraws,
    MissingQuantile,
    MissingTag,
    ParseError,
)
from .ingest import Sex
from .petolopez import AsafSeries

TEST_END = 2015

#: Quantile levels (percent) carried by validation forecasts; supports the
#: 80/90/95% central intervals.
VALIDATION_LEVELS = (2.5, 5.0, 10.0, 50.0, 90.0, 95.0, 97.5)


@dataclass(frozen=True)
class SplitScenario:
    train_end: int
    test_end: int = TEST_END

    def __post_init__(self):
        if not self.train_end < self.test_end:
            raise ValueError("train_end must precede test_end")

    def split(self, series: AsafSeries) -> tuple[AsafSeries, AsafSeries]:
        """Observations at exactly train_end belong to training; the test
        window is (train_end, test_end]."""
        train = {t: v for t, v in series.values.items() if t <= self.train_end}
        test = {
            t: v
            for t, v in series.values.items()
            if self.train_end < t <= self.test_end
        }
        return (
            AsafSeries(series.country, series.sex, train),
            AsafSeries(series.country, series.sex, test),
        )


DEFAULT_SCENARIOS = tuple(SplitScenario(t) for t in (2000, 2005, 2010))


@dataclass
class Forecast:
    """One method's forecast for one (country, sex) over the test years."""

    country: str
    sex: Sex
    years: np.ndarray
    median: np.ndarray
    quantiles: dict[float, np.ndarray] = field(default_factory=dict)  # level% -> values
    draws: np.ndarray | None = None  # (n_draws, n_years)

    def at_year(self, year: int) -> int:
        idx = np.nonzero(self.years == year)[0]
        if len(idx) != 1:
            raise KeyError(year)
        return int(idx[0])


def select_validation_countries(
    series: list[AsafSeries],
    male_clear: set[str],
    scenario: SplitScenario,
) -> list[str]:
    """Countries whose male series passes the quality screen and has more
    than 10 training observations and at least one test observation."""
    out = []
    for s in series:
        if s.sex is not Sex.MALE or s.country not in male_clear:
            continue
        train, test = scenario.split(s)
        if len(train.values) > 10 and len(test.values) >= 1:
            out.append(s.country)
    return sorted(out)


# --- metrics ----------------------------------------------------------------


def mae(pairs: list[tuple[float, float]]) -> float:
    """Pooled mean absolute error over (forecast, observation) pairs."""
    if not pairs:
        raise EmptyValidation("no validation pairs")
    return float(np.mean([abs(f - y) for f, y in pairs]))


def interval_coverage(
    forecasts: dict[str, Forecast],
    observations: dict[str, AsafSeries],
    level: float,
) -> tuple[float, float]:
    """Fraction of test observations inside the central ``level``% interval,
    plus the mean interval half-width."""
    lo_level = (100.0 - level) / 2.0
    hi_level = 100.0 - lo_level
    inside = []
    half_widths = []
    for country, fc in forecasts.items():
        if lo_level not in fc.quantiles or hi_level not in fc.quantiles:
            raise MissingQuantile(f"{country}: no {level}% interval quantiles")
        obs = observations.get(country)
        if obs is None:
            continue
        for year, value in obs.values.items():
            i = fc.at_year(year)
            lo, hi = fc.quantiles[lo_level][i], fc.quantiles[hi_level][i]
            inside.append(lo <= value <= hi)
            half_widths.append(0.5 * (hi - lo))
    if not inside:
        raise EmptyValidation("no validation points for coverage")
    return float(np.mean(inside)), float(np.mean(half_widths))


def crps(samples: np.ndarray, y: float, pair_norm: str = "m2") -> float:
    """Sample CRPS: mean|X - y| - 0.5 mean|X - X'|.

    ``pair_norm`` selects the pair-term denominator: "m2" uses all m^2
    ordered pairs (equals the exact integral of the squared empirical-CDF
    distance); "unbiased" divides by m(m-1).
    """
    x = np.sort(np.asarray(samples, float))
    m = len(x)
    if m < 2:
        raise InsufficientDraws("crps needs at least 2 samples")
    term1 = float(np.mean(np.abs(x - y)))
    # sum_{i<j} (x_j - x_i) via the order-statistic identity
    coeffs = 2.0 * np.arange(1, m + 1) - m - 1.0
    pair_sum = 2.0 * float(coeffs @ x)
    denom = m * m if pair_norm == "m2" else m * (m - 1)
    if pair_norm not in ("m2", "unbiased"):
        raise ValueError(pair_norm)
    return term1 - 0.5 * pair_sum / denom


def crps_aggregate(per_point: dict[str, list[float]]) -> float:
    """Mean over years within each country, then mean over countries."""
    if not per_point:
        raise EmptyValidation("no CRPS values")
    return float(np.mean([np.mean(scores) for scores in per_point.values()]))


def persistence_forecast(train: AsafSeries, test_years: list[int]) -> Forecast:
    """Flat forecast carrying the last training value; no intervals."""
    if not train.values:
        raise EmptyTraining(f"{train.country}/{train.sex.value}: empty training series")
    last = train.values[max(train.values)]
    years = np.array(sorted(test_years))
    return Forecast(
        country=train.country,
        sex=train.sex,
        years=years,
        median=np.full(len(years), last),
    )


# --- report assembly --------------------------------------------------------


@dataclass(frozen=True)
class MethodScores:
    method: str
    sex: Sex
    subgroup: str
    n_countries: int
    mae: float
    crps: float | None
    coverage: dict[float, tuple[float, float]]  # level -> (coverage, half-width)


def score_method(
    method: str,
    sex: Sex,
    forecasts: dict[str, Forecast],
    observations: dict[str, AsafSeries],
    subgroup: str = "all",
    levels: tuple[float, ...] = (80.0, 90.0, 95.0),
) -> MethodScores:
    """All Table-style metrics for one method on one sex's validation set."""
    pairs = []
    crps_points: dict[str, list[float]] = {}
    for country, fc in forecasts.items():
        obs = observations.get(country)
        if obs is None or not obs.values:
            continue
        for year, value in obs.values.items():
            i = fc.at_year(year)
            pairs.append((float(fc.median[i]), value))
            if fc.draws is not None:
                crps_points.setdefault(country, []).append(crps(fc.draws[:, i], value))
    coverage: dict[float, tuple[float, float]] = {}
    has_intervals = all(fc.quantiles for fc in forecasts.values()) and forecasts
    if has_intervals:
        for level in levels:
            coverage[level] = interval_coverage(forecasts, observations, level)
    return MethodScores(
        method=method,
        sex=sex,
        subgroup=subgroup,
        n_countries=len(forecasts),
        mae=mae(pairs),
        crps=crps_aggregate(crps_points) if crps_points else None,
        coverage=coverage,
    )


def read_country_tags(path: str | Path) -> dict[str, str]:
    tags: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"country", "oecd"} <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns country,oecd")
        for rec in reader:
            if rec["oecd"] not in ("Y", "N"):
                raise ParseError(f"{path}: oecd must be Y or N, got {rec['oecd']!r}")
            tags[rec["country"]] = rec["oecd"]
    return tags


def subgroup_report(
    method: str,
    sex: Sex,
    forecasts: dict[str, Forecast],
    observations: dict[str, AsafSeries],
    tags: dict[str, str],
    levels: tuple[float, ...] = (80.0, 90.0, 95.0),
) -> list[MethodScores]:
    """Same metrics computed within the OECD / non-OECD partitions."""
    untagged = sorted(set(forecasts) - set(tags))
    if untagged:
        raise MissingTag(f"countries without an OECD tag: {untagged}")
    out = []
    for tag, label in (("Y", "oecd"), ("N", "non-oecd")):
        members = {c: fc for c, fc in forecasts.items() if tags[c] == tag}
        if not members:
            continue
        obs = {c: observations[c] for c in members if c in observations}
        out.append(score_method(method, sex, members, obs, subgroup=label, levels=levels))
    return out


# --- external forecast import -----------------------------------------------

_EXT_REQUIRED = {"method", "country", "sex", "year", "q025", "q10", "q50", "q90", "q975"}


def import_external_forecasts(path: str | Path) -> dict[tuple[str, str, Sex], Forecast]:
    """Load externally produced forecasts so foreign methods are scored with
    the same code path as internal ones."""
    rows: dict[tuple[str, str, Sex], dict[int, dict[str, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not _EXT_REQUIRED <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns {sorted(_EXT_REQUIRED)}")
        for rec in reader:
            try:
                key = (rec["method"], rec["country"], Sex(rec["sex"]))
                year = int(rec["year"])
                values = {q: float(rec[q]) for q in ("q025", "q10", "q50", "q90", "q975")}
            except (ValueError, KeyError) as exc:
                raise ParseError(f"{path}: bad record {rec}") from exc
            rows.setdefault(key, {})[year] = values
    out: dict[tuple[str, str, Sex], Forecast] = {}
    level_by_col = {"q025": 2.5, "q10": 10.0, "q50": 50.0, "q90": 90.0, "q975": 97.5}
    for key, by_year in rows.items():
        years = np.array(sorted(by_year))
        method, country, sex = key
        quantiles = {
            level: np.array([by_year[int(t)][col] for t in years])
            for col, level in level_by_col.items()
        }
        out[key] = Forecast(
            country=country,
            sex=sex,
            years=years,
            median=quantiles[50.0],
            quantiles=quantiles,
        )
    return out


# --- report CSV -------------------------------------------------------------


def write_validation_csv(
    path: str | Path,
    rows: list[tuple[SplitScenario, MethodScores]],
    pair_norm: str = "m2",
) -> None:
    """Validation table: one row per (scenario, sex, subgroup, method)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "train_end", "test_end", "sex", "subgroup", "method", "n_countries",
                "mae", "cov80", "hw80", "cov90", "hw90", "cov95", "hw95",
                "crps", "crps_pair_norm",
            ]
        )
        for scenario, ms in rows:
            cells = [
                scenario.train_end, scenario.test_end, ms.sex.value, ms.subgroup,
                ms.method, ms.n_countries, repr(ms.mae),
            ]
            for level in (80.0, 90.0, 95.0):
                if level in ms.coverage:
                    cov, hw = ms.coverage[level]
                    cells += [repr(cov), repr(hw)]
                else:
                    cells += ["-", "-"]
            cells.append(repr(ms.crps) if ms.crps is not None else "-")
            cells.append(pair_norm)
            writer.writerow(cells)
