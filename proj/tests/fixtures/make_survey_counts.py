"""Regenerates survey_counts.csv / survey_counts_schema.json / survey_counts_expected.json.

Rows carry exactly the published per-category anemic / not-anemic counts.
Each column is shuffled independently within class, so only the marginals
are meaningful; the shuffle keeps the joint structure free of separation.
"""
import json
import pathlib
import random

# name, kind, [(level, anemic, not_anemic, prevalence, crude_or)], reference first
TABLE = [
    ("child_age", "ordinal", [("6-12", 125, 41, 75.30, None), ("13-24", 213, 134, 61.38, 0.52),
                              ("25-36", 160, 226, 41.45, 0.23), ("37-48", 154, 332, 31.69, 0.15),
                              ("49-59", 118, 352, 25.11, 0.11)]),
    ("fever", "binary", [("No", 540, 835, 39.27, None), ("Yes", 230, 250, 47.92, 1.42)]),
    ("household_size", "one_hot", [("Medium", 415, 568, 42.22, None), ("Large", 100, 104, 49.02, 1.32),
                                   ("Small", 255, 413, 38.17, 0.85)]),
    ("mother_anemia", "binary", [("Not anemic", 448, 776, 36.60, None), ("Anemic", 322, 309, 51.03, 1.81)]),
    ("parasite_deworm", "binary", [("No", 231, 139, 62.43, None), ("Yes", 539, 946, 36.30, 0.34)]),
    ("amenorrhea", "binary", [("No", 668, 1001, 40.02, None), ("Yes", 102, 84, 54.84, 1.82)]),
    ("ethnicity", "one_hot", [("Hill Brahmin/Chhetri", 211, 366, 36.57, None), ("Hill Dalit", 96, 152, 38.71, 1.10),
                              ("Hill Janajati", 126, 242, 34.24, 0.90), ("Other", 200, 167, 54.50, 2.08),
                              ("Terai Caste", 137, 158, 46.44, 1.50)]),
    ("province", "one_hot", [("Madhesh", 176, 175, 50.14, None), ("Bagmati", 83, 130, 38.97, 0.64),
                             ("Gandaki", 48, 105, 31.37, 0.46), ("Karnali", 114, 180, 38.78, 0.63),
                             ("Koshi", 96, 194, 33.10, 0.49), ("Lumbini", 132, 143, 48.00, 0.92),
                             ("Sudurpashchim", 121, 158, 43.37, 0.76)]),
    ("antenatal_care", "binary", [("Adequate ANC", 716, 1040, 40.77, None), ("Inadequate ANC", 54, 45, 54.55, 1.74)]),
    ("breastfeeding", "binary", [("Yes", 707, 1022, 40.89, None), ("No", 63, 63, 50.00, 1.45)]),
    ("mother_deworm", "binary", [("Yes", 688, 1025, 40.16, None), ("No", 82, 60, 57.75, 2.04)]),
]

here = pathlib.Path(__file__).parent
n_pos = sum(a for _, a, _, _, _ in TABLE[0][2])
n_neg = sum(b for _, _, b, _, _ in TABLE[0][2])
columns = []
for name, _, levels in TABLE:
    assert sum(a for _, a, _, _, _ in levels) == n_pos and sum(b for _, _, b, _, _ in levels) == n_neg, name
    pos = [lv for lv, a, _, _, _ in levels for _ in range(a)]
    neg = [lv for lv, _, b, _, _ in levels for _ in range(b)]
    rng = random.Random(f"survey-{name}")
    rng.shuffle(pos)
    rng.shuffle(neg)
    columns.append(pos + neg)
labels = [1] * n_pos + [0] * n_neg

with open(here / "survey_counts.csv", "w", newline="\n") as f:
    f.write(",".join([t[0] for t in TABLE] + ["anemia"]) + "\n")
    for i in range(n_pos + n_neg):
        f.write(",".join([c[i] for c in columns] + [str(labels[i])]) + "\n")

schema = {
    "label_name": "anemia",
    "label_kind": "binary",
    "positive_label": "1",
    "negative_label": "0",
    "features": [{"name": n, "kind": k, "levels": [lv[0] for lv in levels], "reference_level": levels[0][0]}
                 for n, k, levels in TABLE],
}
(here / "survey_counts_schema.json").write_text(json.dumps(schema, indent=2) + "\n")

expected = [{"feature": n, "category": lv, "anemic": a, "not_anemic": b, "prevalence_pct": p, "crude_or": o}
            for n, _, levels in TABLE for lv, a, b, p, o in levels]
(here / "survey_counts_expected.json").write_text(json.dumps(expected, indent=2) + "\n")
