"""Logic-based and instance-based explanations for challenged decisions.

When the model challenges a user's label it can justify its own
suggestion two ways: the decision rule its tree followed for the record
(plus the whole tree for context), and nearby records — real past ones
or synthetic perturbations — labeled the model's way (examples) or the
user's way (counterexamples).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .data import AttributeSchema, CATEGORICAL, Record
from .tree import EFDTClassifier


@dataclass
class LogicExplanation:
    conditions: list[tuple[str, str, object]]
    label: str
    rule_text: str
    tree_text: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": "logic",
            "conditions": [list(c) for c in self.conditions],
            "label": self.label,
            "rule_text": self.rule_text,
            "tree_text": self.tree_text,
            "note": self.note,
        }


@dataclass
class InstanceExplanation:
    examples: list[dict] = field(default_factory=list)       # records tagged with the model's label
    counterexamples: list[dict] = field(default_factory=list)  # records tagged with the user's label
    example_label: str = ""
    counterexample_label: str = ""
    source: str = "real"
    shortage: bool = False

    def to_dict(self) -> dict:
        return {
            "kind": "instances",
            "examples": self.examples,
            "counterexamples": self.counterexamples,
            "example_label": self.example_label,
            "counterexample_label": self.counterexample_label,
            "source": self.source,
            "shortage": self.shortage,
        }


def _render_test(attr: str, op: str, value) -> str:
    if op == "=":
        return f"{attr} = {value}"
    return f"{attr} {op} {value}"


def logic_explanation(model: EFDTClassifier, x: Record, model_label: str) -> LogicExplanation:
    """The local decision rule the tree followed for x, rendered as
    "IF t1 AND ... AND tn THEN <label>", plus the global tree text."""
    steps, _ = model.decision_path(x)
    tree_text = model.render_text()
    if not steps:
        return LogicExplanation(
            conditions=[],
            label=model_label,
            rule_text=f"THEN {model_label}",
            tree_text=tree_text,
            note="model has no splits yet; the default leaf decides",
        )
    rule_text = "IF " + " AND ".join(_render_test(*s) for s in steps) + f" THEN {model_label}"
    return LogicExplanation(conditions=list(steps), label=model_label,
                            rule_text=rule_text, tree_text=tree_text)


def gower_distance(a: Record, b: Record, schema: list[AttributeSchema]) -> float:
    """Mean per-attribute distance: |delta|/range for numerics, 0/1 for categoricals."""
    if not schema:
        return 0.0
    total = 0.0
    for attr in schema:
        va, vb = a[attr.name], b[attr.name]
        if attr.kind == CATEGORICAL:
            total += 0.0 if va == vb else 1.0
        else:
            rng = attr.numeric_range
            if rng > 0:
                total += abs(float(va) - float(vb)) / rng
    return total / len(schema)


def _tagged(record: Record, tag: str, distance: float) -> dict:
    return {"record": dict(record), "label": tag, "distance": distance}


def real_instances(model: EFDTClassifier, past_records: list[Record], x: Record,
                   model_label: str, user_label: str, k: int,
                   schema: list[AttributeSchema]) -> InstanceExplanation:
    """k nearest past records the model labels the model's way and the
    user's way; x itself is excluded, shortages are flagged."""
    examples, counters = [], []
    for r in past_records:
        if r == x or r is x:
            continue
        label, _ = model.predict_one(r)
        if label == model_label:
            examples.append(r)
        elif label == user_label:
            counters.append(r)

    def nearest(pool):
        ranked = sorted(
            ((gower_distance(x, r, schema), i) for i, r in enumerate(pool)),
            key=lambda t: (t[0], t[1]),
        )
        return [(pool[i], d) for d, i in ranked[:k]]

    picked_ex = nearest(examples)
    picked_cx = nearest(counters)
    return InstanceExplanation(
        examples=[_tagged(r, model_label, d) for r, d in picked_ex],
        counterexamples=[_tagged(r, user_label, d) for r, d in picked_cx],
        example_label=model_label,
        counterexample_label=user_label,
        source="real",
        shortage=len(picked_ex) < k or len(picked_cx) < k,
    )


def synthetic_instances(model: EFDTClassifier, schema: list[AttributeSchema],
                        reference_records: list[Record], x: Record,
                        model_label: str, user_label: str, k: int,
                        seed: int, attempt_factor: int = 500) -> InstanceExplanation:
    """Perturb x into k records per side, classified by the model.

    Each attempt resamples 1-3 attributes from the empirical marginals of
    the records labeled so far (falling back to schema domains when
    empty).  Deterministic given the seed; hitting the attempt cap flags
    a shortage rather than erroring.
    """
    rng = random.Random(seed)
    names = [a.name for a in schema]
    marginals = {
        a.name: [r[a.name] for r in reference_records] if reference_records else []
        for a in schema
    }

    def sample_value(attr: AttributeSchema):
        pool = marginals[attr.name]
        if pool:
            return pool[rng.randrange(len(pool))]
        if attr.kind == CATEGORICAL:
            return rng.choice(list(attr.domain)) if attr.domain else x[attr.name]
        lo, hi = (attr.domain or (0.0, 1.0))
        return rng.uniform(float(lo), float(hi))

    examples, counters = [], []
    seen_keys = set()
    attempts = 0
    cap = attempt_factor * max(1, k)
    by_name = {a.name: a for a in schema}
    while attempts < cap and (len(examples) < k or len(counters) < k):
        attempts += 1
        candidate = dict(x)
        for name in rng.sample(names, rng.randint(1, min(3, len(names)))):
            candidate[name] = sample_value(by_name[name])
        if candidate == x:
            continue
        key = tuple(candidate[n] for n in names)
        if key in seen_keys:
            continue
        label, _ = model.predict_one(candidate)
        if label == model_label and len(examples) < k:
            seen_keys.add(key)
            examples.append(_tagged(candidate, model_label, gower_distance(x, candidate, schema)))
        elif label == user_label and len(counters) < k:
            seen_keys.add(key)
            counters.append(_tagged(candidate, user_label, gower_distance(x, candidate, schema)))
    return InstanceExplanation(
        examples=examples,
        counterexamples=counters,
        example_label=model_label,
        counterexample_label=user_label,
        source="synthetic",
        shortage=len(examples) < k or len(counters) < k,
    )
