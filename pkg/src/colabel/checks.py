"""The three non-skepticism checks: ideal rules, individual fairness,
group fairness, plus the unfair-couple metric.

Rules are supervisor-provided and compulsory; they may never touch the
sensitive attribute and must be mutually exclusive, which is verified
symbolically over attribute domains.  Individual fairness works through
a projection index: two records are similar when identical on every
attribute except the sensitive one.  Group fairness measures the
positive-rate gap between the privileged and discriminated groups and
plans label flips that close it while preserving the overall positive
rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .data import AttributeSchema, CATEGORICAL, Dataset, NUMERIC, Record

OPERATORS = ("=", "!=", "<", "<=", ">", ">=")
CATEGORICAL_OPERATORS = ("=", "!=")


class RuleError(ValueError):
    """Malformed or inadmissible rule set."""


class SimilarityConflict(ValueError):
    """Attempt to register a label that contradicts the group's shared label."""


class InsufficientGroupData(ValueError):
    """One sensitive group is empty; the discrimination score is undefined."""


@dataclass(frozen=True)
class Condition:
    attribute: str
    operator: str
    value: object

    def matches(self, x: Record) -> bool:
        v = x[self.attribute]
        if self.operator == "=":
            return v == self.value
        if self.operator == "!=":
            return v != self.value
        if self.operator == "<":
            return v < self.value
        if self.operator == "<=":
            return v <= self.value
        if self.operator == ">":
            return v > self.value
        if self.operator == ">=":
            return v >= self.value
        raise RuleError(f"unknown operator {self.operator!r}")

    def render(self) -> str:
        return f"{self.attribute} {self.operator} {self.value}"


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    label: str

    def covers(self, x: Record) -> bool:
        return all(c.matches(x) for c in self.conditions)

    def render(self) -> str:
        if not self.conditions:
            return f"THEN {self.label}"
        return "IF " + " AND ".join(c.render() for c in self.conditions) + f" THEN {self.label}"


@dataclass
class RuleSet:
    rules: list[Rule] = field(default_factory=list)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def to_dict(self) -> dict:
        return {
            "rules": [
                {
                    "conditions": [
                        {"attribute": c.attribute, "operator": c.operator, "value": c.value}
                        for c in r.conditions
                    ],
                    "label": r.label,
                }
                for r in self.rules
            ]
        }

    @classmethod
    def from_dict(cls, raw: dict, positive_label: str = "+",
                  negative_label: str = "-") -> "RuleSet":
        """Parse {"rules": [{"conditions": [...], "label": ...}]}.

        Rule labels "+" and "-" are aliases resolved against the dataset's
        actual label values.
        """
        alias = {"+": positive_label, "-": negative_label}
        rules = []
        for entry in raw.get("rules", []):
            conds = []
            for c in entry.get("conditions", []):
                op = c.get("operator")
                if op not in OPERATORS:
                    raise RuleError(f"unknown operator {op!r}")
                conds.append(Condition(c["attribute"], op, c["value"]))
            label = str(entry["label"])
            rules.append(Rule(tuple(conds), alias.get(label, label)))
        return cls(rules)

    @classmethod
    def from_json(cls, path, positive_label: str = "+", negative_label: str = "-") -> "RuleSet":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw, positive_label, negative_label)


def validate_ruleset(ruleset: RuleSet, schema: list[AttributeSchema],
                     sensitive_attribute: str) -> list[str]:
    """Return human-readable violations; an empty list means the set is admissible."""
    violations = []
    by_name = {a.name: a for a in schema}
    for i, rule in enumerate(ruleset):
        for cond in rule.conditions:
            if cond.attribute == sensitive_attribute:
                violations.append(f"rule {i}: sensitive attribute in rule ({cond.render()})")
            attr = by_name.get(cond.attribute)
            if attr is None:
                violations.append(f"rule {i}: unknown attribute {cond.attribute!r}")
                continue
            if attr.kind == CATEGORICAL and cond.operator not in CATEGORICAL_OPERATORS:
                violations.append(
                    f"rule {i}: operator {cond.operator!r} invalid for categorical "
                    f"{cond.attribute!r}"
                )
            if attr.kind == NUMERIC and not isinstance(cond.value, (int, float)):
                violations.append(
                    f"rule {i}: numeric attribute {cond.attribute!r} compared "
                    f"to non-number {cond.value!r}"
                )
    rules = list(ruleset)
    for i in range(len(rules)):
        for j in range(i + 1, len(rules)):
            if _jointly_satisfiable(rules[i], rules[j], by_name):
                violations.append(f"rules {i} and {j} are not mutually exclusive")
    return violations


def match_rule(ruleset: RuleSet, x: Record) -> Optional[str]:
    """Label of the unique rule covering x, or None."""
    for rule in ruleset:
        if rule.covers(x):
            return rule.label
    return None


# -- symbolic mutual-exclusivity check ----------------------------------

def _jointly_satisfiable(a: Rule, b: Rule, schema_by_name: dict) -> bool:
    """True when some schema-typed record could satisfy both rules.

    Works per attribute: interval intersection for numerics (domains are
    treated as unbounded), allowed-set intersection for categoricals.
    """
    attrs = {c.attribute for c in a.conditions} | {c.attribute for c in b.conditions}
    for name in attrs:
        attr = schema_by_name.get(name)
        if attr is None:
            continue
        conds = [c for c in (*a.conditions, *b.conditions) if c.attribute == name]
        if attr.kind == CATEGORICAL:
            if not _categorical_satisfiable(conds, attr):
                return False
        else:
            if not _numeric_satisfiable(conds):
                return False
    return True


def _categorical_satisfiable(conds, attr: AttributeSchema) -> bool:
    domain = set(attr.domain) if attr.domain else None
    allowed = domain
    excluded = set()
    for c in conds:
        if c.operator == "=":
            allowed = {c.value} if allowed is None else allowed & {c.value}
        elif c.operator == "!=":
            excluded.add(c.value)
    if allowed is None:
        # open domain: any equality survived, and != can only pin out values
        return True
    return bool(allowed - excluded)


def _numeric_satisfiable(conds) -> bool:
    lo, hi = -math.inf, math.inf
    lo_open = hi_open = False
    required = None
    excluded = set()
    for c in conds:
        v = float(c.value)
        if c.operator == "=":
            if required is not None and required != v:
                return False
            required = v
        elif c.operator == "!=":
            excluded.add(v)
        elif c.operator == "<":
            if v < hi or (v == hi and not hi_open):
                hi, hi_open = v, True
        elif c.operator == "<=":
            if v < hi:
                hi, hi_open = v, False
        elif c.operator == ">":
            if v > lo or (v == lo and not lo_open):
                lo, lo_open = v, True
        elif c.operator == ">=":
            if v > lo:
                lo, lo_open = v, False
    if required is not None:
        inside = (lo < required or (lo == required and not lo_open)) and \
                 (required < hi or (required == hi and not hi_open))
        return inside and required not in excluded
    if lo > hi or (lo == hi and (lo_open or hi_open)):
        return False
    if lo == hi:
        return lo not in excluded
    # a non-degenerate real interval cannot be excluded by finitely many points
    return True


# -- individual-fairness similarity index --------------------------------

def project(x: Record, schema: list[AttributeSchema], sensitive_attribute: str) -> tuple:
    """Projection key: all attribute values except the sensitive one, in schema order."""
    return tuple(x[a.name] for a in schema if a.name != sensitive_attribute)


@dataclass
class SimilarityIndex:
    """Groups past records that are identical modulo the sensitive attribute.

    Every key maps to the label shared by all its members; registering a
    conflicting label is rejected so the caller must resolve it first
    (relabel the past group or change the incoming decision).
    """

    entries: dict = field(default_factory=dict)  # key -> [label, [record indices]]

    def lookup(self, key: tuple) -> Optional[tuple[str, list[int]]]:
        hit = self.entries.get(key)
        if hit is None:
            return None
        return hit[0], list(hit[1])

    def register(self, key: tuple, label: str, record_index: int) -> None:
        hit = self.entries.get(key)
        if hit is None:
            self.entries[key] = [label, [record_index]]
            return
        if hit[0] != label:
            raise SimilarityConflict(
                f"label {label!r} conflicts with shared label {hit[0]!r} for this group"
            )
        hit[1].append(record_index)

    def relabel(self, key: tuple, label: str) -> list[int]:
        """Set the group's shared label, returning the affected indices."""
        hit = self.entries.get(key)
        if hit is None:
            return []
        hit[0] = label
        return list(hit[1])

    def group_size(self, key: tuple) -> int:
        hit = self.entries.get(key)
        return len(hit[1]) if hit else 0


def uc_count(records: list[Record], labels: list[str],
             schema: list[AttributeSchema], sensitive_attribute: str) -> int:
    """Number of unordered pairs identical modulo the sensitive attribute
    but carrying different labels."""
    groups: dict = {}
    for x, y in zip(records, labels):
        key = project(x, schema, sensitive_attribute)
        groups.setdefault(key, {}).setdefault(y, 0)
        groups[key][y] += 1
    pairs = 0
    for by_label in groups.values():
        counts = list(by_label.values())
        total = sum(counts)
        same = sum(c * (c - 1) // 2 for c in counts)
        pairs += total * (total - 1) // 2 - same
    return pairs


# -- group-fairness scoring and planning ---------------------------------

def group_counts(records: list[Record], labels: list[str],
                 sensitive_attribute: str, discriminated_value: str,
                 positive_label: str) -> tuple[int, int, int, int]:
    """(PP, PN, DP, DN): privileged/discriminated x positive/negative sizes."""
    pp = pn = dp = dn = 0
    for x, y in zip(records, labels):
        discriminated = x[sensitive_attribute] == discriminated_value
        positive = y == positive_label
        if discriminated:
            if positive:
                dp += 1
            else:
                dn += 1
        elif positive:
            pp += 1
        else:
            pn += 1
    return pp, pn, dp, dn


def disc_from_counts(pp: int, pn: int, dp: int, dn: int) -> float:
    if pp + pn == 0 or dp + dn == 0:
        raise InsufficientGroupData("insufficient data: one sensitive group is empty")
    return pp / (pp + pn) - dp / (dp + dn)


def disc(records: list[Record], labels: list[str], sensitive_attribute: str,
         discriminated_value: str, positive_label: str) -> float:
    """Positive-rate gap between the privileged and discriminated groups."""
    return disc_from_counts(*group_counts(records, labels, sensitive_attribute,
                                          discriminated_value, positive_label))


def _round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


@dataclass
class GFCPlan:
    """Relabel proposal closing the group positive-rate gap.

    Candidates are the records proposed for flipping, already truncated to
    the target counts and ordered by how plausibly the model considers
    them mislabeled.  ``dn_candidates`` flip to the positive label and are
    negatives from the group with the lower positive rate (the
    discriminated group when the gap is positive, the privileged one when
    it is negative); ``pp_candidates`` flip to the negative label and come
    from the other group's positives.  Ordering is by the model's
    probability of the flip target.
    """

    disc_before: float
    dn_candidates: list[int]
    pp_candidates: list[int]
    target_dn_flips: int
    target_pp_flips: int

    @property
    def is_empty(self) -> bool:
        return not self.dn_candidates and not self.pp_candidates

    def to_dict(self) -> dict:
        return {
            "disc_before": self.disc_before,
            "dn_candidates": list(self.dn_candidates),
            "pp_candidates": list(self.pp_candidates),
            "target_dn_flips": self.target_dn_flips,
            "target_pp_flips": self.target_pp_flips,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GFCPlan":
        return cls(
            disc_before=raw["disc_before"],
            dn_candidates=list(raw["dn_candidates"]),
            pp_candidates=list(raw["pp_candidates"]),
            target_dn_flips=raw["target_dn_flips"],
            target_pp_flips=raw["target_pp_flips"],
        )


def plan_targets(pp: int, pn: int, dp: int, dn: int) -> tuple[int, int]:
    """Flip counts that zero the gap while preserving the overall positive rate.

    Returns (flips to positive in the low-rate group, flips to negative in
    the high-rate group).  Rounds half-up; the residual gap is at most one
    record per group.
    """
    n = pp + pn + dp + dn
    if n == 0:
        return 0, 0
    rate = (pp + dp) / n
    to_positive = max(0, _round_half_up(rate * (dp + dn)) - dp)
    to_negative = max(0, pp - _round_half_up(rate * (pp + pn)))
    return to_positive, to_negative


def plan_gfc(records: list[Record], labels: list[str], eligible: list[bool],
             model, sensitive_attribute: str, discriminated_value: str,
             positive_label: str) -> GFCPlan:
    """Build the relabel proposal for the records labeled so far.

    ``eligible[i]`` is False for records this check may not touch
    (decided by a compulsory check, or bound to a similarity group that
    must stay uniformly labeled).  Targets are clamped to the eligible
    pools.
    """
    pp, pn, dp, dn = group_counts(records, labels, sensitive_attribute,
                                  discriminated_value, positive_label)
    before = disc_from_counts(pp, pn, dp, dn)
    if before >= 0:
        target_dn, target_pp = plan_targets(pp, pn, dp, dn)
        low_rate_group = lambda discriminated: discriminated
    else:
        # the nominally privileged group is the one being shortchanged
        target_dn, target_pp = plan_targets(dp, dn, pp, pn)
        low_rate_group = lambda discriminated: not discriminated

    dn_pool, pp_pool = [], []
    if target_dn or target_pp:
        proba = model.predict_proba(records)
        pos_col = list(model.classes_).index(positive_label)
        for i, (x, y) in enumerate(zip(records, labels)):
            if not eligible[i]:
                continue
            low_side = low_rate_group(x[sensitive_attribute] == discriminated_value)
            positive = y == positive_label
            if low_side and not positive:
                dn_pool.append((-proba[i][pos_col], i))
            elif not low_side and positive:
                pp_pool.append((-(1.0 - proba[i][pos_col]), i))
    dn_pool.sort()
    pp_pool.sort()
    target_dn = min(target_dn, len(dn_pool))
    target_pp = min(target_pp, len(pp_pool))
    return GFCPlan(
        disc_before=before,
        dn_candidates=[i for _, i in dn_pool[:target_dn]],
        pp_candidates=[i for _, i in pp_pool[:target_pp]],
        target_dn_flips=target_dn,
        target_pp_flips=target_pp,
    )


def apply_gfc(labels: list[str], plan: GFCPlan, accepted_dn: list[int],
              accepted_pp: list[int], positive_label: str,
              negative_label: str) -> tuple[list[int], bool]:
    """Flip the accepted candidates in place.

    Returns (changed indices, retrain needed).  Acceptances outside the
    plan are an error.
    """
    dn_set, pp_set = set(plan.dn_candidates), set(plan.pp_candidates)
    if not set(accepted_dn) <= dn_set:
        raise ValueError("accepted index outside the plan's DN candidates")
    if not set(accepted_pp) <= pp_set:
        raise ValueError("accepted index outside the plan's PP candidates")
    changed = []
    for i in accepted_dn:
        if labels[i] != positive_label:
            labels[i] = positive_label
            changed.append(i)
    for i in accepted_pp:
        if labels[i] != negative_label:
            labels[i] = negative_label
            changed.append(i)
    return changed, bool(changed)
