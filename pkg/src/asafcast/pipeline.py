"""Validation pipeline: refit on each training window, forecast the held-out
years, and score against the baselines and any imported external methods."""

from __future__ import annotations

import numpy as np

from .doublelogistic import classify, nls_fit
from .errors import InputError
from .evaluate import (
    VALIDATION_LEVELS,
    Forecast,
    MethodScores,
    SplitScenario,
    persistence_forecast,
    score_method,
    select_validation_countries,
    subgroup_report,
)
from .forecast import project
from .ingest import Sex
from .model import build_country_data
from .petolopez import AsafSeries
from .sampler import DrawStore, run_chains


def classify_training(
    series: list[AsafSeries], scenario: SplitScenario
) -> tuple[set[str], dict]:
    """Clear-pattern male countries judged on training data only."""
    clear = set()
    fits = {}
    for s in series:
        train, _ = scenario.split(s)
        if len(train.values) < 6:
            continue
        report = nls_fit(train)
        fits[(s.country, s.sex)] = report
        if s.sex is Sex.MALE and classify(report, s.sex):
            clear.add(s.country)
    return clear, fits


def forecast_from_store(
    store: DrawStore, scenario: SplitScenario
) -> dict[tuple[str, Sex], Forecast]:
    """Posterior-predictive forecasts of observed ASAF for the test window."""
    trajectories = project(store, (scenario.train_end + 1, scenario.test_end))
    probs = np.array(VALIDATION_LEVELS) / 100.0
    out: dict[tuple[str, Sex], Forecast] = {}
    for (cname, sex), draws in trajectories.y.items():
        q = np.quantile(draws, probs, axis=0, method="median_unbiased")
        quantiles = {level: q[i] for i, level in enumerate(VALIDATION_LEVELS)}
        out[(cname, sex)] = Forecast(
            country=cname,
            sex=sex,
            years=np.array(trajectories.years),
            median=quantiles[50.0],
            quantiles=quantiles,
            draws=draws,
        )
    return out


def run_validation(
    cfg,
    series: list[AsafSeries],
    tags: dict[str, str] | None = None,
    external: dict[tuple[str, str, Sex], Forecast] | None = None,
) -> list[tuple[SplitScenario, MethodScores]]:
    """Score the model, the persistence baseline, and external methods on
    every configured scenario; subgroup breakdowns when tags are supplied."""
    rows: list[tuple[SplitScenario, MethodScores]] = []
    method = cfg.variant.value
    for scenario in cfg.scenarios:
        clear, fits = classify_training(series, scenario)
        countries = select_validation_countries(series, clear, scenario)
        if not countries:
            raise InputError(f"no validation countries for train_end {scenario.train_end}")
        train_series = []
        test_obs: dict[Sex, dict[str, AsafSeries]] = {Sex.MALE: {}, Sex.FEMALE: {}}
        train_by_key: dict[tuple[str, Sex], AsafSeries] = {}
        for s in series:
            if s.country not in countries:
                continue
            train, test = scenario.split(s)
            if train.values:
                train_series.append(train)
                train_by_key[(s.country, s.sex)] = train
            if test.values:
                test_obs[s.sex][s.country] = test

        data = build_country_data(train_series, t_end=scenario.train_end)
        store = run_chains(
            cfg.chain_config, data, cfg.hyper, cfg.variant, fits=fits,
            n_jobs=int(cfg.raw.get("chain", {}).get("jobs", 1)),
        )
        model_fc = forecast_from_store(store, scenario)

        for sex in (Sex.MALE, Sex.FEMALE):
            obs = test_obs[sex]
            fcs = {
                c: fc for (c, s_), fc in model_fc.items() if s_ is sex and c in obs
            }
            if not fcs:
                continue
            rows.append((scenario, score_method(method, sex, fcs, obs)))
            if tags is not None:
                for ms in subgroup_report(method, sex, fcs, obs, tags):
                    rows.append((scenario, ms))

            persist = {
                c: persistence_forecast(
                    train_by_key[(c, sex)], sorted(obs[c].values)
                )
                for c in fcs
                if (c, sex) in train_by_key
            }
            if persist:
                rows.append((scenario, score_method("persistence", sex, persist, obs)))
                if tags is not None:
                    for ms in subgroup_report("persistence", sex, persist, obs, tags):
                        rows.append((scenario, ms))

        if external:
            by_method: dict[tuple[str, Sex], dict[str, Forecast]] = {}
            for (ext_method, country, sex), fc in external.items():
                by_method.setdefault((ext_method, sex), {})[country] = fc
            for (ext_method, sex), fcs in sorted(by_method.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
                obs = test_obs[sex]
                scoped = {c: fc for c, fc in fcs.items() if c in obs}
                if scoped:
                    rows.append((scenario, score_method(ext_method, sex, scoped, obs)))
    return rows
