"""Dataset schema, CSV ingestion, cleaning, and train/stream/test splits.

Records are plain dicts mapping attribute name -> value (str for
categorical attributes, float for numeric ones).  A missing cell is
represented as None until ``clean`` drops the row.
"""

from __future__ import annotations

import csv
import json
import random
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

CATEGORICAL = "categorical"
NUMERIC = "numeric"

#: cell contents treated as a missing value on load
MISSING_TOKENS = {"", "?", "NA", "N/A"}

Record = dict


class DataError(ValueError):
    """Malformed input file or schema violation."""


@dataclass(frozen=True)
class AttributeSchema:
    """One attribute: its name, kind and value domain.

    For categorical attributes ``domain`` is the set of admissible values;
    for numeric ones it is the observed (min, max) range.
    """

    name: str
    kind: str
    domain: tuple = ()

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise DataError(f"unknown attribute kind: {self.kind!r}")

    @property
    def numeric_range(self) -> float:
        if self.kind != NUMERIC or len(self.domain) != 2:
            return 0.0
        return float(self.domain[1]) - float(self.domain[0])


@dataclass
class Dataset:
    """Typed attribute-value rows plus labeling and fairness metadata."""

    schema: list[AttributeSchema]
    records: list[Record]
    labels: Optional[list[str]]
    sensitive_attribute: str
    discriminated_value: str
    positive_label: str
    negative_label: str
    name: str = ""

    def __post_init__(self):
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise DataError("duplicate attribute names in schema")
        if self.sensitive_attribute not in names:
            raise DataError(f"sensitive attribute {self.sensitive_attribute!r} not in schema")
        if self.labels is not None and len(self.labels) != len(self.records):
            raise DataError("labels do not align with records")
        self.schema = [self._observed_domain(a) for a in self.schema]

    def _observed_domain(self, attr: AttributeSchema) -> AttributeSchema:
        if attr.kind != NUMERIC:
            return attr
        values = [r[attr.name] for r in self.records if r.get(attr.name) is not None]
        if not values:
            return replace(attr, domain=(0.0, 0.0))
        return replace(attr, domain=(float(min(values)), float(max(values))))

    @property
    def attribute_names(self) -> list[str]:
        return [a.name for a in self.schema]

    @property
    def label_values(self) -> tuple[str, str]:
        """(negative, positive) label pair."""
        return (self.negative_label, self.positive_label)

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise KeyError(name)

    def validate_record(self, x: Record) -> Record:
        """Check x against the schema, returning a typed copy."""
        return validate_record(x, self.schema)

    def to_csv(self, path) -> None:
        """Write records (and labels, when present) back out as CSV."""
        names = self.attribute_names
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = list(names) + (["label"] if self.labels is not None else [])
            writer.writerow(header)
            for i, r in enumerate(self.records):
                row = [_format_cell(r[n]) for n in names]
                if self.labels is not None:
                    row.append(self.labels[i])
                writer.writerow(row)


def validate_record(x: Record, schema: list[AttributeSchema]) -> Record:
    """Check a record against a schema, returning a typed copy."""
    out = {}
    for a in schema:
        if a.name not in x:
            raise DataError(f"missing attribute: {a.name}")
        v = x[a.name]
        if a.kind == NUMERIC:
            try:
                out[a.name] = float(v)
            except (TypeError, ValueError):
                raise DataError(f"attribute {a.name} expects a number, got {v!r}")
        else:
            v = str(v)
            if a.domain and v not in a.domain:
                raise DataError(f"value {v!r} not in domain of {a.name}")
            out[a.name] = v
    return out


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class DatasetSpec:
    """Sidecar description of a CSV: attribute kinds, label and fairness roles."""

    attributes: list[tuple[str, str]]  # (name, kind)
    label_column: str
    positive_label: str
    negative_label: Optional[str]
    sensitive_attribute: str
    discriminated_value: str
    categorical_domains: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path) -> "DatasetSpec":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetSpec":
        try:
            attrs = [(a["name"], a["kind"]) for a in raw["attributes"]]
            label = raw["label"]
            sens = raw["sensitive"]
            spec = cls(
                attributes=attrs,
                label_column=label["column"],
                positive_label=str(label["positive"]),
                negative_label=str(label["negative"]) if "negative" in label else None,
                sensitive_attribute=sens["attribute"],
                discriminated_value=str(sens["discriminated"]),
                categorical_domains={
                    a["name"]: tuple(str(v) for v in a["domain"])
                    for a in raw["attributes"]
                    if "domain" in a
                },
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed dataset description: {exc}") from exc
        if spec.sensitive_attribute not in [n for n, _ in spec.attributes]:
            raise DataError("sensitive attribute not among declared attributes")
        return spec

    def to_dict(self) -> dict:
        attrs = []
        for name, kind in self.attributes:
            entry = {"name": name, "kind": kind}
            if name in self.categorical_domains:
                entry["domain"] = list(self.categorical_domains[name])
            attrs.append(entry)
        label = {"column": self.label_column, "positive": self.positive_label}
        if self.negative_label is not None:
            label["negative"] = self.negative_label
        return {
            "attributes": attrs,
            "label": label,
            "sensitive": {
                "attribute": self.sensitive_attribute,
                "discriminated": self.discriminated_value,
            },
        }


def load_csv(path, spec: "DatasetSpec | str | Path", name: str = "") -> Dataset:
    """Load a CSV file into a typed Dataset following a sidecar description.

    Columns not mentioned in the description are ignored.  Cells matching
    MISSING_TOKENS become None (dropped later by ``clean``); an unparseable
    numeric cell is an error reported with its row and column.
    """
    if not isinstance(spec, DatasetSpec):
        spec = DatasetSpec.from_json(spec)
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty file: {path}")
        header = [h.strip() for h in header]
        col_index = {h: i for i, h in enumerate(header)}
        for attr_name, _ in spec.attributes:
            if attr_name not in col_index:
                raise DataError(f"missing column: {attr_name}")
        has_labels = spec.label_column in col_index
        records: list[Record] = []
        labels: list[str] = [] if has_labels else None
        for row_idx, row in enumerate(reader):
            if not row or all(c.strip() == "" for c in row):
                continue
            rec = {}
            for attr_name, kind in spec.attributes:
                cell = row[col_index[attr_name]].strip()
                if cell in MISSING_TOKENS:
                    rec[attr_name] = None
                elif kind == NUMERIC:
                    try:
                        rec[attr_name] = float(cell)
                    except ValueError:
                        raise DataError(
                            f"unparseable cell at row {row_idx}, column {attr_name}: {cell!r}"
                        )
                else:
                    rec[attr_name] = cell
            records.append(rec)
            if has_labels:
                cell = row[col_index[spec.label_column]].strip()
                labels.append(None if cell in MISSING_TOKENS else cell)

    negative = spec.negative_label
    if negative is None:
        if labels is None:
            raise DataError("negative label must be declared for unlabeled data")
        observed = {l for l in labels if l is not None and l != spec.positive_label}
        if len(observed) != 1:
            raise DataError(f"labels are not binary: {sorted(observed)} besides positive")
        negative = observed.pop()

    schema = [
        AttributeSchema(n, k, spec.categorical_domains.get(n, ()))
        for n, k in spec.attributes
    ]
    schema = [_infer_domain(a, records) for a in schema]
    ds = Dataset(
        schema=schema,
        records=records,
        labels=labels,
        sensitive_attribute=spec.sensitive_attribute,
        discriminated_value=spec.discriminated_value,
        positive_label=spec.positive_label,
        negative_label=negative,
        name=name or path.stem,
    )
    _check_binary_sensitive(ds)
    return ds


def _infer_domain(attr: AttributeSchema, records: Iterable[Record]) -> AttributeSchema:
    if attr.kind != CATEGORICAL or attr.domain:
        return attr
    seen = sorted({r[attr.name] for r in records if r[attr.name] is not None})
    return replace(attr, domain=tuple(seen))


def _check_binary_sensitive(ds: Dataset) -> None:
    values = {r[ds.sensitive_attribute] for r in ds.records if r[ds.sensitive_attribute] is not None}
    if len(values) > 2:
        raise DataError(
            f"sensitive attribute {ds.sensitive_attribute!r} is not binary: {sorted(values)}"
        )
    if ds.discriminated_value not in values and values:
        raise DataError(
            f"discriminated value {ds.discriminated_value!r} never occurs in "
            f"{ds.sensitive_attribute!r}"
        )


def clean(ds: Dataset) -> Dataset:
    """Drop rows with missing values, then exact duplicates (keeping the first).

    Duplicate detection covers the full row including the label.
    """
    kept_records, kept_labels, seen = [], [], set()
    names = ds.attribute_names
    for i, rec in enumerate(ds.records):
        label = ds.labels[i] if ds.labels is not None else None
        if any(rec[n] is None for n in names) or (ds.labels is not None and label is None):
            continue
        key = tuple(rec[n] for n in names) + (label,)
        if key in seen:
            continue
        seen.add(key)
        kept_records.append(rec)
        kept_labels.append(label)
    if not kept_records:
        warnings.warn(f"dataset {ds.name or '<unnamed>'} is empty after cleaning")
    return Dataset(
        schema=[replace(a) for a in ds.schema],
        records=kept_records,
        labels=kept_labels if ds.labels is not None else None,
        sensitive_attribute=ds.sensitive_attribute,
        discriminated_value=ds.discriminated_value,
        positive_label=ds.positive_label,
        negative_label=ds.negative_label,
        name=ds.name,
    )


@dataclass(frozen=True)
class SplitSizes:
    oracle_train: int = 500
    stream: int = 2000
    test: int = 500

    @property
    def total(self) -> int:
        return self.oracle_train + self.stream + self.test


@dataclass
class Splits:
    """Disjoint parts of a cleaned, labeled dataset.

    ``pretrain`` is the first half of ``oracle_train`` in shuffled order.
    """

    oracle_train: tuple[list[Record], list[str]]
    pretrain: tuple[list[Record], list[str]]
    stream: tuple[list[Record], list[str]]
    test: tuple[list[Record], list[str]]
    seed: int


def make_splits(ds: Dataset, seed: int, sizes: SplitSizes = SplitSizes()) -> Splits:
    """Deterministically shuffle and partition a labeled dataset."""
    if ds.labels is None:
        raise DataError("make_splits needs a labeled dataset")
    n = len(ds.records)
    if n < sizes.total:
        raise DataError(f"need at least {sizes.total} rows, have {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)

    def part(lo, hi):
        idx = order[lo:hi]
        return ([ds.records[i] for i in idx], [ds.labels[i] for i in idx])

    oracle = part(0, sizes.oracle_train)
    stream = part(sizes.oracle_train, sizes.oracle_train + sizes.stream)
    test = part(sizes.oracle_train + sizes.stream, sizes.total)
    half = sizes.oracle_train // 2
    pretrain = (oracle[0][:half], oracle[1][:half])
    return Splits(oracle_train=oracle, pretrain=pretrain, stream=stream, test=test, seed=seed)
