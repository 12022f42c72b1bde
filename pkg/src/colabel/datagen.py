"""Deterministic generators for benchmark-shaped synthetic datasets.

The original census/recidivism/HR benchmark CSVs cannot be redistributed
with this package, so the experiment harness ships with generators that
reproduce their statistical shape instead: group sizes, positive rates,
the positive-rate gap between sensitive groups, concept difficulty, and
the rate of records that collide modulo the sensitive attribute (which
drives the individual-fairness machinery).  Loading the real CSVs is
supported through the sidecar recipes documented in the README; results
there will differ in the exact cell values but not in the qualitative
behavior.

Each generator is deterministic given its seed and returns a cleaned,
labeled Dataset plus the matching supervisor rule set.
"""

from __future__ import annotations

import math
import random

from .checks import Condition, Rule, RuleSet
from .data import AttributeSchema, CATEGORICAL, Dataset, NUMERIC, DatasetSpec, clean

DEFAULT_ROWS = 3400


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def _pick(rng: random.Random, values, weights) -> str:
    return rng.choices(values, weights=weights, k=1)[0]


def _clip_int(v: float, lo: int, hi: int) -> int:
    return min(hi, max(lo, round(v)))


def make_adult_like(seed: int = 0, n_rows: int = DEFAULT_ROWS) -> Dataset:
    """Census-income shape: ~25% positive, ~0.2 positive-rate gap against
    the Female group, a high-capital-gain pocket that is near-certainly
    positive, and occasional cross-group duplicate records."""
    rng = random.Random(seed)
    occupations = ["service", "craft", "clerical", "sales", "professional", "managerial"]
    occupation_effect = {"service": -1.2, "craft": -0.55, "clerical": -0.15,
                         "sales": 0.15, "professional": 1.0, "managerial": 1.45}
    workclasses = ["private", "government", "self_employed"]
    maritals = ["married", "single", "divorced"]
    records, labels = [], []
    for _ in range(n_rows):
        female = rng.random() < 0.33
        education = _clip_int(rng.gauss(10.0, 2.8), 3, 16)
        occupation = _pick(rng, occupations, [24, 20, 19, 14, 13, 10])
        hours = 10 * _clip_int(rng.gauss(42, 9) / 10, 2, 6)
        age = 4 * _clip_int(rng.gauss(38, 12) / 4, 5, 17)
        workclass = _pick(rng, workclasses, [70, 18, 12])
        marital = _pick(rng, maritals, [46, 38, 16])
        if rng.random() < 0.05:
            capital_gain = float(rng.choice([2174, 3103, 5013, 7688, 9386,
                                             10520, 15024, 27828]))
        else:
            capital_gain = 0.0
        score = (
            1.30 * (education - 12)
            + 0.80 * occupation_effect[occupation]
            + 0.10 * (hours - 40) / 9
            + 0.08 * (age - 40) / 12
            + (0.25 if marital == "married" else 0.0)
        )
        base = -8.0 if female else 0.55
        p_pos = _sigmoid(1.10 * score + base)
        if education == 11 and occupation in ("clerical", "sales"):
            # a flat coin-label pocket: keeps a patch of genuinely undecidable
            # records, as real census slices have
            p_pos = 0.5
        if capital_gain > 9000:
            p_pos = 0.985
        elif capital_gain > 0:
            p_pos = min(0.95, p_pos + 0.4)
        positive = rng.random() < p_pos
        records.append({
            "age": float(age),
            "education_num": float(education),
            "hours_per_week": float(hours),
            "capital_gain": capital_gain,
            "occupation": occupation,
            "workclass": workclass,
            "marital_status": marital,
            "sex": "Female" if female else "Male",
        })
        labels.append(">50K" if positive else "<=50K")
    schema = [
        AttributeSchema("age", NUMERIC),
        AttributeSchema("education_num", NUMERIC),
        AttributeSchema("hours_per_week", NUMERIC),
        AttributeSchema("capital_gain", NUMERIC),
        AttributeSchema("occupation", CATEGORICAL, tuple(occupations)),
        AttributeSchema("workclass", CATEGORICAL, tuple(workclasses)),
        AttributeSchema("marital_status", CATEGORICAL, tuple(maritals)),
        AttributeSchema("sex", CATEGORICAL, ("Female", "Male")),
    ]
    ds = Dataset(schema=schema, records=records, labels=labels,
                 sensitive_attribute="sex", discriminated_value="Female",
                 positive_label=">50K", negative_label="<=50K", name="adult-like")
    return clean(ds)


def adult_like_rules() -> RuleSet:
    return RuleSet([Rule((Condition("capital_gain", ">", 9000),), ">50K")])


def make_compas_like(seed: int = 0, n_rows: int = DEFAULT_ROWS) -> Dataset:
    """Recidivism shape: balanced classes, a noisy concept, small attribute
    domains that collide constantly, and a positive-rate gap that runs
    against the privileged group (negative score)."""
    rng = random.Random(seed)
    age_cats = ["under_25", "25_to_45", "over_45"]
    charge_degrees = ["felony", "misdemeanor"]
    records, labels = [], []
    for _ in range(n_rows):
        female = rng.random() < 0.33
        risk = rng.gauss(0.0, 1.0)
        age = _clip_int(34 + 11 * rng.gauss(0, 1) - 6 * risk, 18, 70)
        age_cat = age_cats[0 if age < 25 else (1 if age <= 45 else 2)]
        priors = min(15, max(0, int(rng.expovariate(1 / (1.0 + 1.9 * max(0.0, risk))))))
        charge = _pick(rng, charge_degrees, [64, 36])
        screening_days = float(rng.randrange(0, 60))
        score = (
            0.62 * min(priors, 6)
            + (0.6 if age_cat == "under_25" else (-0.5 if age_cat == "over_45" else 0.0))
            + (0.3 if charge == "felony" else 0.0)
        )
        base = 0.52 if female else -0.27
        p_pos = _sigmoid(0.85 * (score - 1.15) + base)
        positive = rng.random() < p_pos
        records.append({
            "age": float(age),
            "age_category": age_cat,
            "priors_count": float(priors),
            "charge_degree": charge,
            "screening_days": screening_days,
            "sex": "Female" if female else "Male",
        })
        labels.append("recid" if positive else "no_recid")
    schema = [
        AttributeSchema("age", NUMERIC),
        AttributeSchema("age_category", CATEGORICAL, tuple(age_cats)),
        AttributeSchema("priors_count", NUMERIC),
        AttributeSchema("charge_degree", CATEGORICAL, tuple(charge_degrees)),
        AttributeSchema("screening_days", NUMERIC),
        AttributeSchema("sex", CATEGORICAL, ("Female", "Male")),
    ]
    ds = Dataset(schema=schema, records=records, labels=labels,
                 sensitive_attribute="sex", discriminated_value="Female",
                 positive_label="recid", negative_label="no_recid", name="compas-like")
    return clean(ds)


def compas_like_rules() -> RuleSet:
    return RuleSet([Rule((Condition("priors_count", ">", 0),), "recid")])


def make_hr_like(seed: int = 0, n_rows: int = 5000) -> Dataset:
    """Promotion shape: rare positives (~8%), an easy concept, no group
    gap, and frequent cross-group duplicates."""
    rng = random.Random(seed)
    departments = ["sales", "operations", "technology", "analytics", "hr", "finance"]
    educations = ["secondary", "bachelor", "master"]
    records, labels = [], []
    for _ in range(n_rows):
        female = rng.random() < 0.30
        merit = rng.gauss(0.0, 1.0)
        rating = _clip_int(3 + 1.1 * merit, 1, 5)
        kpi = "yes" if rng.random() < _sigmoid(1.4 * merit - 0.3) else "no"
        awards = "True" if rng.random() < 0.025 else "False"
        training = 5 * _clip_int((63 + 9 * merit + rng.gauss(0, 6)) / 5, 8, 19)
        department = _pick(rng, departments, [30, 24, 18, 12, 8, 8])
        education = _pick(rng, educations, [30, 52, 18])
        age = 5 * _clip_int(rng.gauss(35, 8) / 5, 4, 12)
        score = (
            1.15 * (rating - 3)
            + (1.3 if kpi == "yes" else -1.1)
            + 0.55 * (training - 63) / 10
        )
        p_pos = _sigmoid(1.35 * (score - 4.45))
        if awards == "True":
            p_pos = 0.97
        positive = rng.random() < p_pos
        records.append({
            "age": float(age),
            "department": department,
            "education": education,
            "kpi_met": kpi,
            "previous_rating": float(rating),
            "awards_won": awards,
            "training_score": float(training),
            "sex": "Female" if female else "Male",
        })
        labels.append("promoted" if positive else "not_promoted")
    schema = [
        AttributeSchema("age", NUMERIC),
        AttributeSchema("department", CATEGORICAL, tuple(departments)),
        AttributeSchema("education", CATEGORICAL, tuple(educations)),
        AttributeSchema("kpi_met", CATEGORICAL, ("no", "yes")),
        AttributeSchema("previous_rating", NUMERIC),
        AttributeSchema("awards_won", CATEGORICAL, ("False", "True")),
        AttributeSchema("training_score", NUMERIC),
        AttributeSchema("sex", CATEGORICAL, ("Female", "Male")),
    ]
    ds = Dataset(schema=schema, records=records, labels=labels,
                 sensitive_attribute="sex", discriminated_value="Female",
                 positive_label="promoted", negative_label="not_promoted", name="hr-like")
    return clean(ds)


def hr_like_rules() -> RuleSet:
    return RuleSet([Rule((Condition("awards_won", "=", "True"),), "promoted")])


GENERATORS = {
    "adult-like": (make_adult_like, adult_like_rules),
    "compas-like": (make_compas_like, compas_like_rules),
    "hr-like": (make_hr_like, hr_like_rules),
}


def generate(name: str, seed: int = 0, n_rows: int | None = None) -> tuple[Dataset, RuleSet]:
    """Build a named synthetic dataset and its supervisor rules.

    n_rows counts rows before cleaning; each generator's default leaves
    comfortably more than the 3000 cleaned rows the standard splits need.
    """
    if name not in GENERATORS:
        raise KeyError(f"unknown dataset {name!r}; available: {sorted(GENERATORS)}")
    make, rules = GENERATORS[name]
    ds = make(seed=seed) if n_rows is None else make(seed=seed, n_rows=n_rows)
    return ds, rules()


def dataset_spec(ds: Dataset) -> DatasetSpec:
    """Sidecar description matching a generated dataset, for CSV round trips."""
    return DatasetSpec(
        attributes=[(a.name, a.kind) for a in ds.schema],
        label_column="label",
        positive_label=ds.positive_label,
        negative_label=ds.negative_label,
        sensitive_attribute=ds.sensitive_attribute,
        discriminated_value=ds.discriminated_value,
        categorical_domains={a.name: a.domain for a in ds.schema if a.kind == CATEGORICAL},
    )
