#!/usr/bin/env python3
"""Regenerate src/asafcast/data/icd_map.csv.

The mapping ships as an enumerated data file so that corrections are data
edits, not code changes.  "rest of" ranges are expanded here, with the
explicitly listed codes carved out first.  Codes printed with an apparent
list-letter slip in the source tables keep both spellings (e.g. A347/B347
for ICD-9 liver cirrhosis) so either form resolves.
"""

from __future__ import annotations

import csv
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "asafcast" / "data" / "icd_map.csv"

LUNG = "lung_cancer"
UA = "upper_aerodigestive"
OC = "other_cancer"
COPD = "copd"
RESP = "other_respiratory"
VASC = "vascular"
LIVER = "liver_cirrhosis"
NONMED = "other_non_medical"
ALL = "all_causes"


def a_range(lo: int, hi: int) -> list[str]:
    return [f"A{n:03d}" for n in range(lo, hi + 1)]


def b_range(lo: int, hi: int, children: bool = True) -> list[str]:
    codes = []
    for n in range(lo, hi + 1):
        codes.append(f"B{n:02d}")
        if children:
            codes.extend(f"B{n:02d}{d}" for d in range(10))
    return codes


def alpha_range(letter: str, lo: int, hi: int) -> list[str]:
    return [f"{letter}{n:02d}" for n in range(lo, hi + 1)]


def build() -> list[tuple[str, str, str, str]]:
    rows: list[tuple[str, str, str, str]] = []

    def emit(version: str, sublist: str, assignments: dict[str, str]):
        for code, cat in sorted(assignments.items()):
            rows.append((version, sublist, code, cat))

    def assign(table: dict[str, str], codes, cat: str, override: bool = False):
        for code in codes:
            if override or code not in table:
                table[code] = cat

    # ICD-7, A-list
    t: dict[str, str] = {}
    assign(t, ["A050"], LUNG)
    assign(t, ["A044", "A045", "A040"], UA)
    assign(t, a_range(44, 59), OC)          # rest of A044-A059
    assign(t, ["A092", "A093"], COPD)
    assign(t, a_range(87, 97), RESP)        # rest of A087-A097
    assign(t, a_range(79, 86), VASC)
    assign(t, ["A105"], LIVER)
    assign(t, a_range(138, 150), NONMED)
    assign(t, ["A000"], ALL)
    emit("ICD7", "A", t)

    # ICD-8, A-list
    t = {}
    assign(t, ["A051"], LUNG)
    assign(t, ["A045", "A046", "A050"], UA)
    assign(t, a_range(45, 60), OC)          # rest of A045-A060
    assign(t, ["A093"], COPD)
    assign(t, a_range(89, 96), RESP)        # rest of A089-A096
    assign(t, a_range(80, 88), VASC)
    assign(t, ["A102"], LIVER)
    assign(t, a_range(138, 150), NONMED)
    assign(t, ["A000"], ALL)
    emit("ICD8", "A", t)

    # ICD-9, basic tabulation lists 09A / 09B
    t = {}
    assign(t, ["B101"], LUNG)
    assign(t, ["B08"] + [f"B08{d}" for d in range(10)] + ["B090", "B100"], UA)
    assign(t, b_range(8, 14), OC)           # rest of B08-B14
    assign(t, ["B323", "B324", "B325"], COPD)
    assign(t, b_range(31, 32), RESP)        # rest of B31-B32
    assign(t, b_range(25, 30), VASC)
    assign(t, ["A347", "B347"], LIVER)
    assign(t, b_range(47, 56), NONMED)
    assign(t, ["B00"], ALL)
    for sublist in ("09A", "09B"):
        emit("ICD9", sublist, t)

    # ICD-9, mortality list 09N (chapter aggregates for the residual rows)
    t = {}
    assign(t, ["B101"], LUNG)
    assign(t, ["B08"] + [f"B08{d}" for d in range(10)] + ["B090", "B100"], UA)
    assign(t, ["CH02"], OC)
    assign(t, ["B323", "B324", "B325"], COPD)
    assign(t, ["CH08"], RESP)
    assign(t, ["CH07"], VASC)
    assign(t, ["S347", "B347"], LIVER)
    assign(t, ["CH17"], NONMED)
    assign(t, ["B00"], ALL)
    emit("ICD9", "09N", t)

    # ICD-10, condensed list 101
    t = {}
    assign(t, ["1034"], LUNG)
    assign(t, ["1027", "1028", "1033"], UA)
    assign(t, [f"{n}" for n in range(1027, 1047)], OC)   # rest of 1027-1046
    assign(t, ["1076"], COPD)
    assign(t, [f"{n}" for n in range(1072, 1079)], RESP)  # rest of 1072 block
    assign(t, ["1064"], VASC)
    assign(t, ["1080"], LIVER)
    assign(t, ["1095"], NONMED)
    assign(t, ["1000"], ALL)
    emit("ICD10", "101", t)

    # ICD-10, detailed lists 103 / 104 / 10M
    t = {}
    assign(t, alpha_range("C", 33, 34), LUNG)
    assign(t, alpha_range("C", 0, 15) + ["C32"], UA)
    assign(t, alpha_range("C", 0, 97), OC)   # rest of C00-C97
    assign(t, alpha_range("J", 40, 47), COPD)
    assign(t, alpha_range("J", 0, 99), RESP)  # rest of J00-J99
    assign(t, alpha_range("I", 0, 99), VASC)
    assign(t, ["K74", "K70"], LIVER)
    assign(
        t,
        alpha_range("V", 0, 99) + alpha_range("W", 0, 99)
        + alpha_range("X", 0, 99) + alpha_range("Y", 0, 89),
        NONMED,
    )
    assign(t, ["AAA"], ALL)
    for sublist in ("103", "104", "10M"):
        emit("ICD10", sublist, t)

    return rows


def main() -> None:
    rows = build()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["icd_version", "sublist", "code", "category"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
