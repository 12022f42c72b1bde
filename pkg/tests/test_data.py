import json

import pytest

from colabel.data import (
    DataError, DatasetSpec, SplitSizes, clean, load_csv, make_splits,
)
from colabel.datagen import dataset_spec, generate


def write_csv(path, rows, header="age,job,sex,income"):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


def spec_dict(**overrides):
    base = {
        "attributes": [
            {"name": "age", "kind": "numeric"},
            {"name": "job", "kind": "categorical"},
            {"name": "sex", "kind": "categorical"},
        ],
        "label": {"column": "income", "positive": "high"},
        "sensitive": {"attribute": "sex", "discriminated": "F"},
    }
    base.update(overrides)
    return base


def test_load_parses_numeric_cells(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["39,clerk,M,high", "20,cook,F,low"])
    ds = load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))
    assert ds.records[0]["age"] == 39.0
    assert ds.records[1]["job"] == "cook"
    assert ds.labels == ["high", "low"]
    assert ds.attribute("age").domain == (20.0, 39.0)


def test_load_missing_column_reported(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["39,clerk,high"], header="age,job,income")
    with pytest.raises(DataError, match="missing column: sex"):
        load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))


def test_load_unparseable_cell_reports_row_and_column(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["39,clerk,M,high", "abc,cook,F,low"])
    with pytest.raises(DataError, match="row 1, column age"):
        load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))


def test_load_empty_file(tmp_path):
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("", encoding="utf-8")
    with pytest.raises(DataError, match="empty file"):
        load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))


def test_load_cardinality(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, [f"{20 + i % 40},job{i % 3},{'MF'[i % 2]},low" for i in range(2500)])
    ds = load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))
    assert len(ds.records) == 2500


def test_non_binary_sensitive_rejected(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["39,clerk,M,high", "20,cook,F,low", "30,cook,X,low"])
    with pytest.raises(DataError, match="not binary"):
        load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))


def test_clean_drops_missing_and_duplicates(tmp_path):
    csv_path = tmp_path / "d.csv"
    rows = [f"{20+i},job{i},M,low" for i in range(7)]
    rows += [rows[0], rows[1]]          # exact duplicates
    rows += ["25,?,F,low"]              # missing cell
    write_csv(csv_path, rows)
    ds = load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))
    assert len(ds.records) == 10
    cleaned = clean(ds)
    assert len(cleaned.records) == 7


def test_clean_identity_when_clean(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["39,clerk,M,high", "20,cook,F,low"])
    ds = load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))
    cleaned = clean(ds)
    assert cleaned.records == ds.records and cleaned.labels == ds.labels


def test_clean_all_incomplete_warns(tmp_path):
    csv_path = tmp_path / "d.csv"
    write_csv(csv_path, ["?,clerk,M,high", "20,?,F,low"])
    ds = load_csv(csv_path, DatasetSpec.from_dict(spec_dict()))
    with pytest.warns(UserWarning, match="empty after cleaning"):
        cleaned = clean(ds)
    assert cleaned.records == []


def test_clean_is_idempotent():
    ds, _ = generate("compas-like", seed=5, n_rows=800)
    once = clean(ds)
    twice = clean(once)
    assert twice.records == once.records and twice.labels == once.labels


def test_csv_round_trip(tmp_path):
    ds, _ = generate("adult-like", seed=2, n_rows=400)
    out = tmp_path / "out.csv"
    ds.to_csv(out)
    back = load_csv(out, dataset_spec(ds), name=ds.name)
    assert back.records == ds.records
    assert back.labels == ds.labels
    assert [a.domain for a in back.schema] == [a.domain for a in ds.schema]


def test_splits_deterministic_and_disjoint():
    ds, _ = generate("adult-like", seed=1)
    a = make_splits(ds, seed=42)
    b = make_splits(ds, seed=42)
    assert a.stream[0] == b.stream[0] and a.test[1] == b.test[1]

    ids = lambda part: {id(r) for r in part[0]}
    assert not ids(a.oracle_train) & ids(a.stream)
    assert not ids(a.stream) & ids(a.test)
    assert not ids(a.oracle_train) & ids(a.test)


def test_split_sizes_default():
    ds, _ = generate("adult-like", seed=1)
    s = make_splits(ds, seed=0)
    assert len(s.oracle_train[0]) == 500
    assert len(s.pretrain[0]) == 250
    assert s.pretrain[0] == s.oracle_train[0][:250]
    assert len(s.stream[0]) == 2000
    assert len(s.test[0]) == 500


def test_split_insufficient_rows():
    ds, _ = generate("adult-like", seed=1, n_rows=500)
    with pytest.raises(DataError, match="need at least"):
        make_splits(ds, seed=0)
    make_splits(ds, seed=0, sizes=SplitSizes(oracle_train=100, stream=200, test=50))


def test_sidecar_spec_round_trip(tmp_path):
    raw = spec_dict()
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    spec = DatasetSpec.from_json(path)
    assert spec.label_column == "income"
    assert spec.sensitive_attribute == "sex"
    assert DatasetSpec.from_dict(spec.to_dict()) == spec
