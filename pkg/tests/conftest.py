import random

import pytest

from colabel.checks import Condition, Rule, RuleSet
from colabel.data import AttributeSchema, Dataset
from colabel.engine import LabelingTask


def tiny_schema():
    return [
        AttributeSchema("experience", "numeric", (0.0, 20.0)),
        AttributeSchema("grade", "categorical", ("low", "mid", "high")),
        AttributeSchema("sex", "categorical", ("F", "M")),
    ]


def tiny_record(experience=5.0, grade="mid", sex="M"):
    return {"experience": float(experience), "grade": grade, "sex": sex}


def tiny_dataset(n=60, seed=3, noise=0.0):
    """Labeled toy dataset: positive iff experience > 8, grade-biased noise optional."""
    rng = random.Random(seed)
    records, labels = [], []
    for _ in range(n):
        rec = tiny_record(
            experience=rng.randrange(0, 20),
            grade=rng.choice(("low", "mid", "high")),
            sex=rng.choice(("F", "M")),
        )
        positive = rec["experience"] > 8
        if noise and rng.random() < noise:
            positive = not positive
        records.append(rec)
        labels.append("+" if positive else "-")
    return Dataset(
        schema=tiny_schema(), records=records, labels=labels,
        sensitive_attribute="sex", discriminated_value="F",
        positive_label="+", negative_label="-", name="tiny",
    )


def tiny_task():
    return LabelingTask(
        schema=tuple(tiny_schema()), negative_label="-", positive_label="+",
        sensitive_attribute="sex", discriminated_value="F",
    )


def hire_rule(threshold=15.0, label="+"):
    return RuleSet([Rule((Condition("experience", ">", threshold),), label)])


@pytest.fixture
def task():
    return tiny_task()


@pytest.fixture
def dataset():
    return tiny_dataset()
