"""Command-line interface: batch orchestration of the full pipeline.

Configuration comes from a TOML file plus flag overrides (flags win).  Every
command writes into a run directory named by the hash of its effective
configuration and inputs, emits a manifest, and draws all randomness from
the single configured seed.  Exit codes: 0 success, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import tomli

from . import __version__
from .doublelogistic import nls_fit, classify
from .errors import AsafError, InputError, MissingInput, NumericalError
from .evaluate import SplitScenario, read_country_tags, write_validation_csv
from .forecast import project, quantile_fan, write_projections_csv
from .ingest import (
    IcdMap,
    Sex,
    canonical_population,
    canonicalize_ages,
    interpolate_population,
    read_deaths_csv,
    read_population_csv,
)
from .model import HyperParams, Variant, build_country_data
from .diagnostics import (
    diagnostics_report,
    sensitivity_matrix,
    write_diagnostics_csv,
    write_sensitivity_csv,
)
from .petolopez import (
    AsafSeries,
    ReferenceRates,
    asaf_for_year,
    read_asaf_csv,
    write_asaf_csv,
)
from .runio import RunManifest, store_from_files, write_draws
from .sampler import ChainConfig, DrawStore, run_chains


class RunConfig:
    """Effective configuration: TOML file contents with flag overrides."""

    def __init__(self, raw: dict):
        self.raw = raw

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        raw: dict = {}
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    raw = tomli.load(fh)
            except FileNotFoundError as exc:
                raise MissingInput(f"config file not found: {path}") from exc
        chain = raw.setdefault("chain", {})
        for flag, key in (
            ("seed", "seed"), ("chains", "n_chains"),
            ("iters", "iterations"), ("warmup", "warmup"),
        ):
            if overrides.get(flag) is not None:
                chain[key] = overrides[flag]
        if overrides.get("variant") is not None:
            raw["variant"] = overrides["variant"]
        if overrides.get("train_end") is not None:
            raw["train_end"] = overrides["train_end"]
        if overrides.get("out") is not None:
            raw["out"] = overrides["out"]
        return cls(raw)

    def input_path(self, name: str, required: bool = True) -> Path | None:
        value = self.raw.get("inputs", {}).get(name)
        if value is None:
            if required:
                raise MissingInput(f"config provides no inputs.{name}")
            return None
        path = Path(value)
        if not path.exists():
            raise MissingInput(f"inputs.{name}: {path} does not exist")
        return path

    @property
    def chain_config(self) -> ChainConfig:
        c = self.raw.get("chain", {})
        try:
            return ChainConfig(
                n_chains=int(c.get("n_chains", 3)),
                iterations=int(c.get("iterations", 10000)),
                warmup=int(c.get("warmup", 2000)),
                seed=int(c.get("seed", 0)),
                thinning=int(c.get("thinning", 1)),
            )
        except ValueError as exc:
            raise InputError(f"bad chain configuration: {exc}") from exc

    @property
    def variant(self) -> Variant:
        return Variant(self.raw.get("variant", "bayes"))

    @property
    def hyper(self) -> HyperParams:
        try:
            return HyperParams().with_overrides(
                {k: float(v) for k, v in self.raw.get("hyper", {}).items()}
            )
        except KeyError as exc:
            raise InputError(str(exc)) from exc

    @property
    def horizon(self) -> tuple[int, int]:
        h = self.raw.get("horizon", {})
        return int(h.get("start", 2015)), int(h.get("end", 2050))

    @property
    def scenarios(self) -> list[SplitScenario]:
        ends = self.raw.get("scenarios", [2000, 2005, 2010])
        if self.raw.get("train_end") is not None:
            ends = [self.raw["train_end"]]
        return [SplitScenario(int(t)) for t in ends]

    @property
    def out_root(self) -> Path:
        return Path(self.raw.get("out", "runs"))

    def manifest(self, command: str) -> RunManifest:
        return RunManifest(
            command=command, config=self.raw, seed=self.chain_config.seed
        )


def _run_dir(cfg: RunConfig, manifest: RunManifest) -> Path:
    out = cfg.out_root / f"{manifest.command}-{manifest.hash}"
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- pipeline stages --------------------------------------------------------


def estimate_series(cfg: RunConfig, manifest: RunManifest) -> list[AsafSeries]:
    deaths_path = cfg.input_path("deaths")
    pop_path = cfg.input_path("population")
    ref_path = cfg.input_path("reference_rates")
    map_path = cfg.input_path("icd_map", required=False)
    for path in (deaths_path, pop_path, ref_path, map_path):
        if path is not None:
            manifest.add_input(path)
    icd_map = IcdMap.from_csv(map_path) if map_path else IcdMap.default()
    reference = ReferenceRates.from_csv(ref_path)

    with manifest.stage("estimate"):
        tables = read_deaths_csv(deaths_path)
        population = read_population_csv(pop_path)
        annual = {
            key: {bucket: interpolate_population(s) for bucket, s in by_age.items()}
            for key, by_age in population.items()
        }
        out: dict[tuple[str, Sex], AsafSeries] = {}
        for table in tables:
            by_age = annual.get((table.country, table.sex))
            if by_age is None:
                continue
            pop_year = canonical_population(by_age, table.year)
            if not pop_year:
                continue
            deaths = canonicalize_ages(table, icd_map)
            value = asaf_for_year(deaths, pop_year, reference, table.sex)
            if value is None:
                continue
            series = out.setdefault(
                (table.country, table.sex), AsafSeries(table.country, table.sex)
            )
            series.values[table.year] = value
    return [out[k] for k in sorted(out, key=lambda k: (k[0], k[1].value))]


def load_or_estimate(cfg: RunConfig, manifest: RunManifest) -> list[AsafSeries]:
    asaf_path = cfg.input_path("asaf", required=False)
    if asaf_path is not None:
        manifest.add_input(asaf_path)
        return read_asaf_csv(asaf_path)
    return estimate_series(cfg, manifest)


def classify_series(
    series: list[AsafSeries], manifest: RunManifest
) -> list[dict[str, object]]:
    rows = []
    with manifest.stage("classify"):
        for s in series:
            if len(s.values) < 6:
                rows.append(
                    {
                        "country": s.country, "sex": s.sex.value,
                        "n_obs": len(s.values), "clear_pattern": 0,
                    }
                )
                continue
            report = nls_fit(s)
            theta = report.theta_hat
            rows.append(
                {
                    "country": s.country, "sex": s.sex.value,
                    "n_obs": report.n_obs, "max_obs": repr(report.max_obs),
                    "r_squared": repr(report.r_squared),
                    "a1": repr(theta.a1), "a2": repr(theta.a2), "a3": repr(theta.a3),
                    "a4": repr(theta.a4), "k": repr(theta.k),
                    "clear_pattern": int(classify(report, s.sex)),
                }
            )
    return rows


_CLASSIFY_COLUMNS = [
    "country", "sex", "n_obs", "max_obs", "r_squared",
    "a1", "a2", "a3", "a4", "k", "clear_pattern",
]


def write_classification_csv(path: Path, rows: list[dict[str, object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CLASSIFY_COLUMNS, restval="")
        writer.writeheader()
        writer.writerows(rows)


def modeling_set(series: list[AsafSeries]):
    """Series entering the joint fit: all series of countries whose male
    series passes the clear-pattern screen."""
    clear_male = set()
    fits = {}
    for s in series:
        if s.sex is Sex.MALE and len(s.values) >= 6:
            report = nls_fit(s)
            fits[(s.country, s.sex)] = report
            if classify(report, s.sex):
                clear_male.add(s.country)
    selected = [s for s in series if s.country in clear_male]
    for s in selected:
        if s.sex is Sex.FEMALE and len(s.values) >= 6:
            fits[(s.country, s.sex)] = nls_fit(s)
    return selected, clear_male, fits


def fit_draws(
    cfg: RunConfig, series: list[AsafSeries], manifest: RunManifest
) -> DrawStore:
    selected, _, fits = modeling_set(series)
    if not selected:
        raise InputError("no clear-pattern male countries to fit")
    data = build_country_data(selected)
    with manifest.stage("fit"):
        store = run_chains(
            cfg.chain_config, data, cfg.hyper, cfg.variant, fits=fits,
            n_jobs=int(cfg.raw.get("chain", {}).get("jobs", 1)),
        )
    return store


def persist_fit(out_dir: Path, store: DrawStore) -> None:
    write_draws(out_dir, store)
    meta = {
        "variant": store.variant.value,
        "country_names": store.country_names,
        "sexes": store.sexes,
        "t_end": store.t_end,
        "acceptance": store.acceptance,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_store(cfg: RunConfig, manifest: RunManifest) -> DrawStore:
    fit_dir = cfg.raw.get("inputs", {}).get("fit_dir")
    if fit_dir is None:
        series = load_or_estimate(cfg, manifest)
        return fit_draws(cfg, series, manifest)
    fit_dir = Path(fit_dir)
    meta_path = fit_dir / "meta.json"
    if not meta_path.exists():
        raise MissingInput(f"no meta.json in {fit_dir}")
    meta = json.loads(meta_path.read_text())
    return store_from_files(
        fit_dir, cfg.chain_config, Variant(meta["variant"]), meta
    )


def store_diagnostics_rows(store: DrawStore) -> list[dict[str, object]]:
    return diagnostics_report(
        {name: store.parameter(name) for name in store.param_names}
    )


# --- command plumbing -------------------------------------------------------


def _common_options(fn):
    @click.option("--config", "config_path", type=str, default=None,
                  help="TOML configuration file.")
    @click.option("--seed", type=int, default=None)
    @click.option("--chains", type=int, default=None)
    @click.option("--iters", type=int, default=None)
    @click.option("--warmup", type=int, default=None)
    @click.option("--variant", type=click.Choice(["bayes", "bayes-s"]), default=None)
    @click.option("--train-end", type=int, default=None)
    @click.option("--out", type=str, default=None)
    @functools.wraps(fn)
    def wrapper(config_path, **overrides):
        try:
            cfg = RunConfig.load(config_path, overrides)
            fn(cfg)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)
        except AsafError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Batch forecasting of smoking-attributable mortality fractions."""


@main.command()
@_common_options
def estimate(cfg: RunConfig):
    """Estimate annual ASAF series from death and population tables."""
    manifest = cfg.manifest("estimate")
    series = estimate_series(cfg, manifest)
    out = _run_dir(cfg, manifest)
    write_asaf_csv(out / "asaf.csv", series)
    manifest.write(out)
    click.echo(out / "asaf.csv")


@main.command(name="classify")
@_common_options
def classify_cmd(cfg: RunConfig):
    """Screen ASAF series for a clear rise-peak-decline pattern."""
    manifest = cfg.manifest("classify")
    series = load_or_estimate(cfg, manifest)
    rows = classify_series(series, manifest)
    out = _run_dir(cfg, manifest)
    write_classification_csv(out / "classification.csv", rows)
    manifest.write(out)
    click.echo(out / "classification.csv")


@main.command()
@_common_options
def fit(cfg: RunConfig):
    """Fit the hierarchical model by MCMC and report diagnostics."""
    manifest = cfg.manifest("fit")
    series = load_or_estimate(cfg, manifest)
    store = fit_draws(cfg, series, manifest)
    out = _run_dir(cfg, manifest)
    persist_fit(out, store)
    with manifest.stage("diagnostics"):
        write_diagnostics_csv(out / "diagnostics.csv", store_diagnostics_rows(store))
    manifest.write(out)
    click.echo(out)


@main.command(name="project")
@_common_options
def project_cmd(cfg: RunConfig):
    """Project trajectories over the configured horizon."""
    manifest = cfg.manifest("project")
    store = load_store(cfg, manifest)
    with manifest.stage("project"):
        trajectories = project(store, cfg.horizon)
        fan = quantile_fan(trajectories)
    out = _run_dir(cfg, manifest)
    write_projections_csv(out / "projections.csv", fan)
    manifest.write(out)
    click.echo(out / "projections.csv")


@main.command()
@_common_options
def validate(cfg: RunConfig):
    """Out-of-sample validation against held-out years."""
    from .pipeline import run_validation

    from .evaluate import import_external_forecasts

    manifest = cfg.manifest("validate")
    series = load_or_estimate(cfg, manifest)
    tags_path = cfg.input_path("tags", required=False)
    tags = read_country_tags(tags_path) if tags_path else None
    if tags_path:
        manifest.add_input(tags_path)
    ext_path = cfg.input_path("external_forecasts", required=False)
    external = import_external_forecasts(ext_path) if ext_path else None
    if ext_path:
        manifest.add_input(ext_path)
    with manifest.stage("validate"):
        rows = run_validation(cfg, series, tags, external)
    out = _run_dir(cfg, manifest)
    write_validation_csv(out / "validation.csv", rows)
    manifest.write(out)
    click.echo(out / "validation.csv")


@main.command()
@_common_options
def diagnose(cfg: RunConfig):
    """Convergence diagnostics for a stored or fresh fit."""
    manifest = cfg.manifest("diagnose")
    store = load_store(cfg, manifest)
    out = _run_dir(cfg, manifest)
    with manifest.stage("diagnostics"):
        write_diagnostics_csv(out / "diagnostics.csv", store_diagnostics_rows(store))
    manifest.write(out)
    click.echo(out / "diagnostics.csv")


@main.command()
@_common_options
def sensitivity(cfg: RunConfig):
    """Normalized local sensitivity of globals to the prior constants."""
    from .model import GLOBAL_NAMES

    manifest = cfg.manifest("sensitivity")
    store = load_store(cfg, manifest)
    out = _run_dir(cfg, manifest)
    with manifest.stage("sensitivity"):
        global_draws = {name: store.flat(name) for name in GLOBAL_NAMES}
        matrix = sensitivity_matrix(global_draws, cfg.hyper)
    write_sensitivity_csv(out / "sensitivity.csv", matrix)
    manifest.write(out)
    click.echo(out / "sensitivity.csv")


if __name__ == "__main__":
    main()
