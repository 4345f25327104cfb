"""Parsing of death-count and population tables into canonical rate tables.

Raw inputs are normalized CSVs (see ``deaths.csv`` / ``population.csv``
schemas in the README).  Cause codes are mapped to nine analysis categories
through a versioned data file shipped with the package
(``data/icd_map.csv``); source five-year age groups are collapsed into the
seven canonical groups used by the attributable-fraction estimator.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    InsufficientData,
    MissingDenominator,
    ParseError,
    RejectedAgeFormat,
    RejectedSublist,
)


class Sex(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"


class CauseCategory(enum.Enum):
    LUNG_CANCER = 1
    UPPER_AERODIGESTIVE = 2
    OTHER_CANCER = 3
    COPD = 4
    OTHER_RESPIRATORY = 5
    VASCULAR = 6
    LIVER_CIRRHOSIS = 7
    OTHER_NON_MEDICAL = 8
    OTHER_MEDICAL = 9
    ALL_CAUSES = 0

    @property
    def label(self) -> str:
        return _CATEGORY_LABELS[self]


_CATEGORY_LABELS = {
    CauseCategory.LUNG_CANCER: "lung_cancer",
    CauseCategory.UPPER_AERODIGESTIVE: "upper_aerodigestive",
    CauseCategory.OTHER_CANCER: "other_cancer",
    CauseCategory.COPD: "copd",
    CauseCategory.OTHER_RESPIRATORY: "other_respiratory",
    CauseCategory.VASCULAR: "vascular",
    CauseCategory.LIVER_CIRRHOSIS: "liver_cirrhosis",
    CauseCategory.OTHER_NON_MEDICAL: "other_non_medical",
    CauseCategory.OTHER_MEDICAL: "other_medical",
    CauseCategory.ALL_CAUSES: "all_causes",
}
CATEGORY_BY_LABEL = {v: k for k, v in _CATEGORY_LABELS.items()}

#: The nine substantive categories (everything except the all-causes total).
CAUSE_CATEGORIES = tuple(c for c in CauseCategory if c is not CauseCategory.ALL_CAUSES)

#: Canonical age groups as (low, high) with ``None`` for an open upper end.
AGE_GROUPS: tuple[tuple[int, int | None], ...] = (
    (0, 34),
    (35, 59),
    (60, 64),
    (65, 69),
    (70, 74),
    (75, 79),
    (80, None),
)

ACCEPTED_SUBLISTS: dict[str, frozenset[str]] = {
    "ICD7": frozenset({"A"}),
    "ICD8": frozenset({"A"}),
    "ICD9": frozenset({"09A", "09B", "09N"}),
    "ICD10": frozenset({"101", "103", "104", "10M"}),
}

ACCEPTED_AGE_FORMATS = frozenset({"00", "01", "02", "03", "04"})

AgeBucket = tuple[int, int | None]


@dataclass(frozen=True)
class DeathTable:
    """Raw cause-of-death counts for one (country, year, sex)."""

    country: str
    year: int
    sex: Sex
    icd_version: str
    sublist: str
    age_format: str
    counts: dict[tuple[str, AgeBucket], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.icd_version not in ACCEPTED_SUBLISTS:
            raise RejectedSublist(f"unknown ICD version {self.icd_version!r}")
        if self.sublist not in ACCEPTED_SUBLISTS[self.icd_version]:
            raise RejectedSublist(
                f"sublist {self.sublist!r} not accepted for {self.icd_version}"
            )
        if self.age_format not in ACCEPTED_AGE_FORMATS:
            raise RejectedAgeFormat(f"age format {self.age_format!r} not accepted")
        for (code, _), n in self.counts.items():
            if n < 0:
                raise ParseError(f"negative count for cause {code!r}")


@dataclass(frozen=True)
class PopulationSeries:
    """Person counts by year for one (country, sex, age bucket)."""

    country: str
    sex: Sex
    age: AgeBucket
    values: dict[int, float]

    def __post_init__(self):
        for year, n in self.values.items():
            if n <= 0:
                raise ParseError(
                    f"non-positive population for {self.country}/{year}"
                )


# --- ICD code mapping -------------------------------------------------------


class IcdMap:
    """Cause-code to category lookup keyed by (ICD version, sublist)."""

    def __init__(self, rows: dict[tuple[str, str], dict[str, CauseCategory]]):
        self._rows = rows

    @classmethod
    def from_csv(cls, path: str | Path) -> "IcdMap":
        rows: dict[tuple[str, str], dict[str, CauseCategory]] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"icd_version", "sublist", "code", "category"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ParseError(f"icd map {path}: expected columns {sorted(required)}")
            for rec in reader:
                key = (rec["icd_version"], rec["sublist"])
                cat = CATEGORY_BY_LABEL.get(rec["category"])
                if cat is None:
                    raise ParseError(f"unknown category {rec['category']!r}")
                rows.setdefault(key, {})[rec["code"]] = cat
        return cls(rows)

    @classmethod
    def default(cls) -> "IcdMap":
        with resources.as_file(
            resources.files("asafcast").joinpath("data/icd_map.csv")
        ) as p:
            return cls.from_csv(p)

    def lookup(self, icd_version: str, sublist: str, code: str) -> CauseCategory:
        """Map one cause code; unlisted codes fall into the residual category."""
        accepted = ACCEPTED_SUBLISTS.get(icd_version)
        if accepted is None or sublist not in accepted:
            raise RejectedSublist(f"({icd_version}, {sublist}) not accepted")
        table = self._rows.get((icd_version, sublist), {})
        # Finer codes than the map carries are matched by prefix (e.g. C341
        # falls back to C34); the minimum stem length is 3 characters.
        probe = code.strip().upper()
        while len(probe) >= 3:
            cat = table.get(probe)
            if cat is not None:
                return cat
            probe = probe[:-1]
        return CauseCategory.OTHER_MEDICAL


def map_icd_code(
    icd_version: str, sublist: str, code: str, icd_map: IcdMap | None = None
) -> CauseCategory:
    """Map one cause code to its category for the given version/sublist."""
    if icd_map is None:
        icd_map = IcdMap.default()
    return icd_map.lookup(icd_version, sublist, code)


# --- population interpolation -----------------------------------------------


def interpolate_population(series: PopulationSeries) -> PopulationSeries:
    """Linearly interpolate a quinquennial series to annual values.

    Exact at the source years; no extrapolation beyond the endpoints.
    """
    years = sorted(series.values)
    if len(years) < 2:
        raise InsufficientData(
            f"population series {series.country} needs at least two points"
        )
    annual: dict[int, float] = {}
    for lo, hi in zip(years, years[1:]):
        v_lo, v_hi = series.values[lo], series.values[hi]
        span = hi - lo
        for year in range(lo, hi):
            w = (year - lo) / span
            annual[year] = v_lo + w * (v_hi - v_lo)
    annual[years[-1]] = series.values[years[-1]]
    return PopulationSeries(series.country, series.sex, series.age, annual)


# --- age canonicalization ---------------------------------------------------


def _assign_bucket(bucket: AgeBucket) -> tuple[int, int | None] | None:
    """Return the canonical group containing the bucket, or None if it straddles."""
    lo, hi = bucket
    if hi is None:
        if lo >= 80:
            return (80, None)
        if lo == 75:
            # An open 75+ bucket carries all old-age deaths; the 80+ group
            # inherits the 75-79 fraction downstream, so the weight placement
            # is equivalent.
            return (75, 79)
        return None
    for glo, ghi in AGE_GROUPS:
        if ghi is None:
            if lo >= glo:
                return (glo, None)
        elif glo <= lo and hi <= ghi:
            return (glo, ghi)
    return None


def _check_age_coverage(buckets: set[AgeBucket]) -> None:
    """Require contiguous coverage of ages 0-74 plus something at 75+."""
    closed = sorted(b for b in buckets if b[1] is not None and b[0] < 75)
    cursor = 0
    for lo, hi in closed:
        if lo > cursor:
            raise RejectedAgeFormat(f"gap in age coverage at {cursor}-{lo - 1}")
        cursor = max(cursor, hi + 1)
    if cursor < 75:
        raise RejectedAgeFormat(f"age coverage stops at {cursor - 1}")
    if not any(b[0] >= 75 for b in buckets):
        raise RejectedAgeFormat("no bucket covering ages 75+")


def canonicalize_ages(
    table: DeathTable, icd_map: IcdMap | None = None
) -> dict[tuple[CauseCategory, AgeBucket], float]:
    """Collapse source age buckets into the seven canonical groups.

    Cause codes are mapped to categories in the same pass; counts for codes
    mapping to the same category are summed.
    """
    if icd_map is None:
        icd_map = IcdMap.default()
    buckets = {bucket for (_, bucket) in table.counts}
    _check_age_coverage(buckets)
    out: dict[tuple[CauseCategory, AgeBucket], float] = {}
    for (code, bucket), count in table.counts.items():
        group = _assign_bucket(bucket)
        if group is None:
            raise RejectedAgeFormat(f"bucket {bucket} straddles canonical groups")
        cat = icd_map.lookup(table.icd_version, table.sublist, code)
        key = (cat, group)
        out[key] = out.get(key, 0.0) + count
    return out


def mortality_rates(
    deaths: dict[tuple[CauseCategory, AgeBucket], float],
    population: dict[AgeBucket, float],
) -> dict[tuple[CauseCategory, AgeBucket], float]:
    """Per person-year death rates by category and canonical age group."""
    rates = {}
    for (cat, age), count in deaths.items():
        pop = population.get(age)
        if pop is None or pop <= 0:
            raise MissingDenominator(f"no population for age group {age}")
        rates[(cat, age)] = count / pop
    return rates


def canonical_population(
    series_by_age: dict[AgeBucket, PopulationSeries], year: int
) -> dict[AgeBucket, float]:
    """Aggregate annual (already interpolated) population into canonical groups."""
    out: dict[AgeBucket, float] = {}
    for bucket, series in series_by_age.items():
        if year not in series.values:
            continue
        group = _assign_bucket(bucket)
        if group is None:
            raise RejectedAgeFormat(f"population bucket {bucket} straddles groups")
        out[group] = out.get(group, 0.0) + series.values[year]
    return out


# --- CSV readers ------------------------------------------------------------


def _parse_bucket(low: str, high: str) -> AgeBucket:
    hi = high.strip()
    return (int(low), None if hi in ("", "+", "open") else int(hi))


def read_deaths_csv(path: str | Path) -> list[DeathTable]:
    """Read the normalized deaths table, one DeathTable per (country, year, sex)."""
    groups: dict[tuple, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {
            "country", "year", "sex", "icd_version", "sublist",
            "age_format", "cause_code", "age_low", "age_high", "count",
        }
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns {sorted(required)}")
        for rec in reader:
            key = (
                rec["country"], int(rec["year"]), Sex(rec["sex"]),
                rec["icd_version"], rec["sublist"], rec["age_format"],
            )
            bucket = _parse_bucket(rec["age_low"], rec["age_high"])
            counts = groups.setdefault(key, {})
            ck = (rec["cause_code"], bucket)
            counts[ck] = counts.get(ck, 0.0) + float(rec["count"])
    return [
        DeathTable(c, y, s, v, sub, fmt, counts)
        for (c, y, s, v, sub, fmt), counts in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].value)
        )
    ]


def read_population_csv(
    path: str | Path,
) -> dict[tuple[str, Sex], dict[AgeBucket, PopulationSeries]]:
    """Read quinquennial population and return per (country, sex) bucket series."""
    raw: dict[tuple[str, Sex, AgeBucket], dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"country", "year", "sex", "age_low", "age_high", "count"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"{path}: expected columns {sorted(required)}")
        for rec in reader:
            bucket = _parse_bucket(rec["age_low"], rec["age_high"])
            key = (rec["country"], Sex(rec["sex"]), bucket)
            raw.setdefault(key, {})[int(rec["year"])] = float(rec["count"])
    out: dict[tuple[str, Sex], dict[AgeBucket, PopulationSeries]] = {}
    for (country, sex, bucket), values in raw.items():
        series = PopulationSeries(country, sex, bucket, values)
        out.setdefault((country, sex), {})[bucket] = series
    return out
