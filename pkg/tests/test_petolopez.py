"""Attributable-fraction estimation against independent arithmetic oracles."""

import math

import pytest

from asafcast.errors import InvalidReference, MissingAgeGroup, MissingDenominator
from asafcast.ingest import AGE_GROUPS, CAUSE_CATEGORIES, CauseCategory, Sex
from asafcast.petolopez import (
    AsafSeries,
    ReferenceRates,
    apply_age_rules,
    asaf,
    asaf_for_year,
    cause_age_saf,
    excess_risk,
    prevalence_proxy,
    read_asaf_csv,
    write_asaf_csv,
)

ADULT = AGE_GROUPS[1:6]  # closed groups 35-79


class TestPrevalenceProxy:
    def test_linear_interpolation(self):
        assert prevalence_proxy(0.002, 0.004, 0.001) == pytest.approx(1.0 / 3.0)

    def test_clamped_to_unit_interval(self):
        assert prevalence_proxy(0.0005, 0.004, 0.001) == 0.0
        assert prevalence_proxy(0.01, 0.004, 0.001) == 1.0

    def test_invalid_reference_ordering(self):
        with pytest.raises(InvalidReference):
            prevalence_proxy(0.002, 0.001, 0.004)
        with pytest.raises(InvalidReference):
            prevalence_proxy(0.002, 0.001, 0.001)


class TestExcessRisk:
    def test_lung_full_excess(self):
        assert excess_risk(CauseCategory.LUNG_CANCER, 21.3) == pytest.approx(20.3)

    @pytest.mark.parametrize(
        "cat",
        [
            CauseCategory.UPPER_AERODIGESTIVE,
            CauseCategory.OTHER_CANCER,
            CauseCategory.COPD,
            CauseCategory.OTHER_RESPIRATORY,
            CauseCategory.VASCULAR,
            CauseCategory.OTHER_MEDICAL,
        ],
    )
    def test_halved_excess(self, cat):
        assert excess_risk(cat, 3.0) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "cat", [CauseCategory.LIVER_CIRRHOSIS, CauseCategory.OTHER_NON_MEDICAL]
    )
    def test_zeroed_categories(self, cat):
        assert excess_risk(cat, 10.0) == 0.0

    def test_protective_risk_floored_at_zero(self):
        assert excess_risk(CauseCategory.LUNG_CANCER, 0.5) == 0.0


class TestCellSaf:
    def test_saf_identity(self):
        # independent arithmetic: p*er/(p*er + 1) at p = 2/3, er = 20.3
        p, er = 2.0 / 3.0, 20.3
        expected = p * er / (p * er + 1.0)
        assert cause_age_saf(p, er) == pytest.approx(expected, abs=1e-15)
        assert cause_age_saf(p, er) == pytest.approx(0.9311926605504587, abs=1e-12)

    def test_zero_prevalence_or_risk(self):
        assert cause_age_saf(0.0, 20.0) == 0.0
        assert cause_age_saf(0.5, 0.0) == 0.0


class TestAgeRules:
    def test_young_zeroed_open_inherits(self):
        saf = {age: 0.5 for age in ADULT}
        saf[(0, 34)] = 0.9
        saf[(75, 79)] = 0.4
        out = apply_age_rules(saf)
        assert out[(0, 34)] == 0.0
        assert out[(80, None)] == 0.4

    def test_missing_75_79_rejected(self):
        with pytest.raises(MissingAgeGroup):
            apply_age_rules({(35, 59): 0.5})


class TestAggregation:
    def test_death_share_weighting(self):
        saf = {
            (CauseCategory.LUNG_CANCER, (60, 64)): 0.8,
            (CauseCategory.VASCULAR, (60, 64)): 0.2,
        }
        deaths = {
            (CauseCategory.LUNG_CANCER, (60, 64)): 30.0,
            (CauseCategory.VASCULAR, (60, 64)): 70.0,
        }
        assert asaf(saf, deaths) == pytest.approx((0.8 * 30 + 0.2 * 70) / 100)

    def test_zero_total_rejected(self):
        with pytest.raises(MissingDenominator):
            asaf({}, {(CauseCategory.LUNG_CANCER, (60, 64)): 0.0})


def _fixture_reference() -> ReferenceRates:
    d_s, d_ns, rr = {}, {}, {}
    for i, age in enumerate(ADULT):
        for sex in (Sex.MALE, Sex.FEMALE):
            d_s[(age, sex)] = 0.002 + 0.001 * i
            d_ns[(age, sex)] = 0.0001 + 0.00005 * i
            rr[(CauseCategory.LUNG_CANCER, age, sex)] = 20.0 + i
            rr[(CauseCategory.VASCULAR, age, sex)] = 2.0 + 0.1 * i
            rr[(CauseCategory.COPD, age, sex)] = 8.0
    return ReferenceRates(d_s, d_ns, rr)


def _fixture_inputs(scale: float):
    """Death counts covering every category, plus matching population."""
    deaths = {}
    population = {}
    for i, age in enumerate(ADULT + ((0, 34), (80, None))):
        population[age] = 100000.0 * (1.0 + 0.1 * i)
    for cat in CAUSE_CATEGORIES:
        for age in ADULT + ((0, 34), (80, None)):
            deaths[(cat, age)] = scale * (10.0 + cat.value + age[0] / 10.0)
    return deaths, population


def _oracle_asaf(deaths, population, sex, reference) -> float:
    """Spreadsheet-style recomputation with no shared code paths."""
    halved = {
        CauseCategory.UPPER_AERODIGESTIVE, CauseCategory.OTHER_CANCER,
        CauseCategory.COPD, CauseCategory.OTHER_RESPIRATORY,
        CauseCategory.VASCULAR, CauseCategory.OTHER_MEDICAL,
    }
    zeroed = {CauseCategory.LIVER_CIRRHOSIS, CauseCategory.OTHER_NON_MEDICAL}
    saf = {}
    for cat in CAUSE_CATEGORIES:
        for age in ADULT:
            d_obs = deaths[(CauseCategory.LUNG_CANCER, age)] / population[age]
            ds = reference.d_smoker[(age, sex)]
            dns = reference.d_nonsmoker[(age, sex)]
            p = (d_obs - dns) / (ds - dns)
            p = min(max(p, 0.0), 1.0)
            r = reference.relative_risk.get((cat, age, sex), 1.0)
            if cat in zeroed:
                er = 0.0
            elif cat is CauseCategory.LUNG_CANCER:
                er = max(r - 1.0, 0.0)
            elif cat in halved:
                er = max(0.5 * (r - 1.0), 0.0)
            saf[(cat, age)] = p * er / (p * er + 1.0)
        saf[(cat, (0, 34))] = 0.0
        saf[(cat, (80, None))] = saf[(cat, (75, 79))]
    num = sum(saf[key] * n for key, n in deaths.items())
    return num / sum(deaths.values())


class TestFullPipeline:
    def test_matches_independent_oracle(self):
        reference = _fixture_reference()
        for sex in (Sex.MALE, Sex.FEMALE):
            for scale in (1.0, 2.5, 0.3):
                deaths, population = _fixture_inputs(scale)
                got = asaf_for_year(deaths, population, reference, sex)
                want = _oracle_asaf(deaths, population, sex, reference)
                assert got == pytest.approx(want, abs=1e-12)

    def test_partial_cause_coverage_drops_year(self):
        reference = _fixture_reference()
        deaths, population = _fixture_inputs(1.0)
        partial = {
            key: n for key, n in deaths.items()
            if key[0] is not CauseCategory.VASCULAR
        }
        assert asaf_for_year(partial, population, reference, Sex.MALE) is None

    def test_missing_population_rejected(self):
        reference = _fixture_reference()
        deaths, population = _fixture_inputs(1.0)
        del population[(60, 64)]
        with pytest.raises(MissingDenominator):
            asaf_for_year(deaths, population, reference, Sex.MALE)

    def test_all_causes_row_excluded_from_weights(self):
        reference = _fixture_reference()
        deaths, population = _fixture_inputs(1.0)
        with_total = dict(deaths)
        for age in ADULT + ((0, 34), (80, None)):
            with_total[(CauseCategory.ALL_CAUSES, age)] = 1e9
        assert asaf_for_year(with_total, population, reference, Sex.MALE) == (
            pytest.approx(asaf_for_year(deaths, population, reference, Sex.MALE), abs=1e-15)
        )


class TestReferenceValidation:
    def test_smoker_must_exceed_nonsmoker(self):
        with pytest.raises(InvalidReference):
            ReferenceRates({((35, 59), Sex.MALE): 0.001},
                           {((35, 59), Sex.MALE): 0.002}, {})

    def test_negative_relative_risk_rejected(self):
        with pytest.raises(InvalidReference):
            ReferenceRates(
                {((35, 59), Sex.MALE): 0.002},
                {((35, 59), Sex.MALE): 0.001},
                {(CauseCategory.LUNG_CANCER, (35, 59), Sex.MALE): -1.0},
            )

    def test_from_csv(self, tmp_path):
        path = tmp_path / "reference.csv"
        path.write_text(
            "kind,category,age_low,age_high,sex,value\n"
            "dS,,60,64,male,0.004\n"
            "dNS,,60,64,male,0.0002\n"
            "rr,lung_cancer,60,64,male,21.0\n"
        )
        ref = ReferenceRates.from_csv(path)
        assert ref.d_smoker[((60, 64), Sex.MALE)] == 0.004
        assert ref.relative_risk[(CauseCategory.LUNG_CANCER, (60, 64), Sex.MALE)] == 21.0


class TestSeriesIo:
    def test_round_trip_exact(self, tmp_path):
        series = [
            AsafSeries("B", Sex.MALE, {1990: 0.123456789012345, 1991: 1 / 3}),
            AsafSeries("A", Sex.FEMALE, {2000: math.pi / 10}),
        ]
        path = tmp_path / "asaf.csv"
        write_asaf_csv(path, series)
        back = read_asaf_csv(path)
        assert [(s.country, s.sex) for s in back] == [
            ("A", Sex.FEMALE), ("B", Sex.MALE)
        ]
        assert back[1].values == series[0].values  # repr round-trips floats

    def test_byte_identical_rewrites(self, tmp_path):
        series = [AsafSeries("A", Sex.MALE, {1990: 0.2, 1991: 0.25})]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_asaf_csv(p1, series)
        write_asaf_csv(p2, series)
        assert p1.read_bytes() == p2.read_bytes()
