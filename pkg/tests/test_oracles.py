import pytest

from colabel.data import make_splits
from colabel.datagen import generate
from colabel.metrics import accuracy
from colabel.oracles import GowerKNN, MixedNaiveBayes

from conftest import tiny_record, tiny_schema


def test_nb_single_class_training():
    nb = MixedNaiveBayes(schema=tiny_schema(), labels=("-", "+"))
    nb.fit([tiny_record(experience=i) for i in range(5)], ["-"] * 5)
    assert nb.predict_one(tiny_record(experience=100)) == "-"


def test_nb_learns_categorical_signal():
    records = [tiny_record(grade="high") for _ in range(20)]
    records += [tiny_record(grade="low") for _ in range(20)]
    labels = ["+"] * 20 + ["-"] * 20
    nb = MixedNaiveBayes(schema=tiny_schema(), labels=("-", "+")).fit(records, labels)
    assert nb.predict_one(tiny_record(grade="high")) == "+"
    assert nb.predict_one(tiny_record(grade="low")) == "-"
    proba = nb.predict_proba([tiny_record(grade="high")])[0]
    assert proba[1] > 0.9


def test_nb_empty_training_rejected():
    with pytest.raises(ValueError, match="empty"):
        MixedNaiveBayes(schema=tiny_schema(), labels=("-", "+")).fit([], [])


def test_knn_identity_case():
    records = [tiny_record(experience=i, grade="low") for i in range(10)]
    labels = ["+" if i >= 5 else "-" for i in range(10)]
    knn = GowerKNN(schema=tiny_schema(), labels=("-", "+"), k=1).fit(records, labels)
    for r, l in zip(records, labels):
        assert knn.predict_one(r) == l


def test_knn_distance_ties_break_to_lower_index():
    a = tiny_record(experience=0, grade="low", sex="M")
    b = tiny_record(experience=0, grade="low", sex="F")  # same distance to query
    knn = GowerKNN(schema=tiny_schema(), labels=("-", "+"), k=1).fit([a, b], ["+", "-"])
    query = tiny_record(experience=0, grade="low", sex="X")
    assert knn.predict_one(query) == "+"


def test_knn_vote_tie_breaks_negative():
    records = [tiny_record(experience=0), tiny_record(experience=10)]
    knn = GowerKNN(schema=tiny_schema(), labels=("-", "+"), k=2).fit(records, ["+", "-"])
    assert knn.predict_one(tiny_record(experience=5)) == "-"


def test_knn_k_bounds():
    with pytest.raises(ValueError, match="out of range"):
        GowerKNN(schema=tiny_schema(), labels=("-", "+"), k=3).fit(
            [tiny_record()], ["-"])


def test_oracle_accuracy_on_generated_benchmark():
    ds, _ = generate("adult-like", seed=0)
    splits = make_splits(ds, seed=5)
    labels = (ds.negative_label, ds.positive_label)
    test_records, test_labels = splits.test
    nb = MixedNaiveBayes(schema=ds.schema, labels=labels).fit(*splits.oracle_train)
    knn = GowerKNN(schema=ds.schema, labels=labels, k=5).fit(*splits.oracle_train)
    assert accuracy(list(nb.predict(test_records)), test_labels) >= 0.70
    assert accuracy(list(knn.predict(test_records)), test_labels) >= 0.70
