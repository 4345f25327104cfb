"""Indirect estimation of the all-age smoking-attributable fraction (ASAF).

The lung-cancer mortality rate serves as the exposure proxy: comparing the
observed rate against reference smoker/nonsmoker rates gives an implied
smoking prevalence, which is combined with per-cause excess risks and
aggregated over causes and age groups with death-count weights.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    InvalidReference,
    MissingAgeGroup,
    MissingDenominator,
    ParseError,
)
from .ingest import (
    AGE_GROUPS,
    CAUSE_CATEGORIES,
    CATEGORY_BY_LABEL,
    AgeBucket,
    CauseCategory,
    Sex,
)

log = logging.getLogger(__name__)

#: Closed adult age groups (35-79); the open 80+ group inherits the 75-79
#: fraction rather than being estimated directly.
_ADULT_GROUPS = AGE_GROUPS[1:-1]

#: Causes whose excess risk is halved to control for confounding.
_DISCOUNTED = frozenset(
    {
        CauseCategory.UPPER_AERODIGESTIVE,
        CauseCategory.OTHER_CANCER,
        CauseCategory.COPD,
        CauseCategory.OTHER_RESPIRATORY,
        CauseCategory.VASCULAR,
        CauseCategory.OTHER_MEDICAL,
    }
)

#: Causes whose excess risk is fixed at zero.
_ZEROED = frozenset({CauseCategory.LIVER_CIRRHOSIS, CauseCategory.OTHER_NON_MEDICAL})


@dataclass(frozen=True)
class ReferenceRates:
    """Reference smoker/nonsmoker lung-cancer rates and per-cause relative risks."""

    d_smoker: dict[tuple[AgeBucket, Sex], float]
    d_nonsmoker: dict[tuple[AgeBucket, Sex], float]
    relative_risk: dict[tuple[CauseCategory, AgeBucket, Sex], float]

    def __post_init__(self):
        for key, ds in self.d_smoker.items():
            dns = self.d_nonsmoker.get(key)
            if dns is None or not (ds > dns >= 0.0):
                raise InvalidReference(f"need d_smoker > d_nonsmoker >= 0 at {key}")
        for key, r in self.relative_risk.items():
            if not (r >= 0.0):
                raise InvalidReference(f"relative risk at {key} must be finite >= 0")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ReferenceRates":
        d_s: dict[tuple[AgeBucket, Sex], float] = {}
        d_ns: dict[tuple[AgeBucket, Sex], float] = {}
        rr: dict[tuple[CauseCategory, AgeBucket, Sex], float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"kind", "category", "age_low", "age_high", "sex", "value"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ParseError(f"{path}: expected columns {sorted(required)}")
            for rec in reader:
                hi = rec["age_high"].strip()
                age: AgeBucket = (
                    int(rec["age_low"]),
                    None if hi in ("", "+", "open") else int(hi),
                )
                sex = Sex(rec["sex"])
                value = float(rec["value"])
                kind = rec["kind"]
                if kind == "dS":
                    d_s[(age, sex)] = value
                elif kind == "dNS":
                    d_ns[(age, sex)] = value
                elif kind == "rr":
                    cat = CATEGORY_BY_LABEL.get(rec["category"])
                    if cat is None:
                        raise ParseError(f"unknown category {rec['category']!r}")
                    rr[(cat, age, sex)] = value
                else:
                    raise ParseError(f"unknown kind {kind!r}")
        return cls(d_s, d_ns, rr)


@dataclass
class AsafSeries:
    """Observed annual ASAF for one country and sex."""

    country: str
    sex: Sex
    values: dict[int, float] = field(default_factory=dict)

    @property
    def years(self) -> list[int]:
        return sorted(self.values)


def prevalence_proxy(d_obs: float, d_smoker: float, d_nonsmoker: float) -> float:
    """Implied smoking prevalence from the observed lung-cancer rate.

    The observed rate is interpolated between the nonsmoker and smoker
    reference rates and clamped to [0, 1].
    """
    if not (d_smoker > d_nonsmoker >= 0.0):
        raise InvalidReference("need d_smoker > d_nonsmoker >= 0")
    p = (d_obs - d_nonsmoker) / (d_smoker - d_nonsmoker)
    if p > 1.0:
        log.debug("observed rate %g above smoker reference %g", d_obs, d_smoker)
    return min(max(p, 0.0), 1.0)


def excess_risk(category: CauseCategory, relative_risk: float) -> float:
    """Per-cause excess risk, discounted or zeroed by category rules."""
    if category in _ZEROED:
        return 0.0
    if category is CauseCategory.LUNG_CANCER:
        er = relative_risk - 1.0
    elif category in _DISCOUNTED:
        er = 0.5 * (relative_risk - 1.0)
    else:
        raise ValueError(f"no excess-risk rule for {category}")
    return max(er, 0.0)


def cause_age_saf(prevalence: float, er: float) -> float:
    """Attributable fraction y = p*er / (p*er + 1) for one cause/age cell."""
    y = prevalence * er / (prevalence * er + 1.0)
    return max(y, 0.0)


def apply_age_rules(saf_by_age: dict[AgeBucket, float]) -> dict[AgeBucket, float]:
    """Zero out ages 0-34 and carry the 75-79 value to 80+."""
    if (75, 79) not in saf_by_age:
        raise MissingAgeGroup("75-79 value required to fill the open age group")
    out = dict(saf_by_age)
    out[(0, 34)] = 0.0
    out[(80, None)] = saf_by_age[(75, 79)]
    return out


def asaf(
    saf: dict[tuple[CauseCategory, AgeBucket], float],
    deaths: dict[tuple[CauseCategory, AgeBucket], float],
) -> float:
    """All-age ASAF: death-count-share weighted average of the cell fractions."""
    total = sum(deaths.values())
    if total <= 0:
        raise MissingDenominator("zero total deaths in aggregation")
    if any(n < 0 for n in deaths.values()):
        raise ValueError("negative death count")
    return sum(saf.get(key, 0.0) * n for key, n in deaths.items()) / total


def asaf_for_year(
    deaths: dict[tuple[CauseCategory, AgeBucket], float],
    population: dict[AgeBucket, float],
    reference: ReferenceRates,
    sex: Sex,
) -> float | None:
    """Full per-(country, sex, year) estimate, or None if the year is unusable.

    Years with partial cause coverage are dropped rather than zero-filled so
    the aggregation weights stay unbiased.
    """
    present = {cat for (cat, _) in deaths}
    if not set(CAUSE_CATEGORIES) <= present:
        return None
    cell_deaths = {
        (cat, age): n
        for (cat, age), n in deaths.items()
        if cat is not CauseCategory.ALL_CAUSES
    }

    prevalence: dict[AgeBucket, float] = {}
    for age in _ADULT_GROUPS:
        key = (age, sex)
        if key not in reference.d_smoker:
            raise InvalidReference(f"no reference lung-cancer rates for {key}")
        pop = population.get(age)
        if pop is None or pop <= 0:
            raise MissingDenominator(f"no population for age group {age}")
        d_obs = cell_deaths.get((CauseCategory.LUNG_CANCER, age), 0.0) / pop
        prevalence[age] = prevalence_proxy(
            d_obs, reference.d_smoker[key], reference.d_nonsmoker[key]
        )

    saf: dict[tuple[CauseCategory, AgeBucket], float] = {}
    for cat in CAUSE_CATEGORIES:
        by_age: dict[AgeBucket, float] = {(0, 34): 0.0}
        for age in _ADULT_GROUPS:
            rr = reference.relative_risk.get((cat, age, sex), 1.0)
            by_age[age] = cause_age_saf(prevalence[age], excess_risk(cat, rr))
        by_age = apply_age_rules(by_age)
        for age, y in by_age.items():
            saf[(cat, age)] = y
    return asaf(saf, cell_deaths)


# --- asaf.csv I/O -----------------------------------------------------------


def write_asaf_csv(path: str | Path, series: list[AsafSeries]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "sex", "year", "asaf"])
        for s in sorted(series, key=lambda s: (s.country, s.sex.value)):
            for year in s.years:
                writer.writerow([s.country, s.sex.value, year, repr(s.values[year])])


def read_asaf_csv(path: str | Path) -> list[AsafSeries]:
    table: dict[tuple[str, Sex], AsafSeries] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"country", "sex", "year", "asaf"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns {sorted(required)}")
        for rec in reader:
            key = (rec["country"], Sex(rec["sex"]))
            series = table.setdefault(key, AsafSeries(*key))
            series.values[int(rec["year"])] = float(rec["asaf"])
    return [table[k] for k in sorted(table, key=lambda k: (k[0], k[1].value))]
