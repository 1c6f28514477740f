import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbench import learners
from fairbench.data import parse_schema, load_dataset, synth_generate
from fairbench.metrics import PredictionSet, full_metric_vector
from fairbench.preprocess import (
    CODE_SUFFIX,
    PreprocessError,
    as_original,
    binarize_sensitive,
    combine_sensitive,
    encode_numerical,
    load_processed,
    load_splits,
    make_splits,
    make_variant,
    save_processed,
    save_splits,
    train_size,
)

PEOPLE = """
[dataset]
name = people
positive_label = 1
sensitive = race:White, sex:Male

[columns]
color = categorical feature
height = numeric feature
race = categorical sensitive
sex = categorical sensitive
y = categorical label
"""

PEOPLE_CSV = b"""color,height,race,sex,y
green,1.5,White,Woman,1
red,2.0,Asian,Male,0
blue,1.75,White,Male,1
green,1.25,Black,Woman,0
red,1.0,White,Woman,1
"""


def people():
    return load_dataset(parse_schema(PEOPLE), PEOPLE_CSV)


def test_combine_sensitive_names_and_privileged():
    t = combine_sensitive(people(), ["race", "sex"])
    assert t.frame["race-sex"].iloc[0] == "White-Woman"
    assert t.schema.privileged("race-sex") == "White-Male"
    assert t.schema.names("sensitive") == ["race", "sex", "race-sex"]
    assert t.schema.names()[-1] == "y"


def test_combine_sensitive_errors():
    with pytest.raises(PreprocessError):
        combine_sensitive(people(), ["race"])
    with pytest.raises(PreprocessError):
        combine_sensitive(people(), ["race", "color"])


def test_one_hot_first_appearance_order():
    pt = encode_numerical(people())
    assert pt.encoding_map["color"] == ["green", "red", "blue"]
    cols = pt.indicator_columns["color"]
    assert cols == ["color=green", "color=red", "color=blue"]
    # row 0 is green
    assert [int(pt.frame[c].iloc[0]) for c in cols] == [1, 0, 0]
    # row 2 is blue -> (0, 0, 1); green rows (0, 1, 0) style check for "red"
    assert [int(pt.frame[c].iloc[1]) for c in cols] == [0, 1, 0]
    assert (pt.frame[cols].sum(axis=1) == 1).all()
    assert pt.frame["height"].tolist() == people().frame["height"].tolist()


def test_sensitive_kept_categorical_with_code_column():
    pt = encode_numerical(people())
    assert list(pt.frame["race"]) == list(people().frame["race"])
    assert list(pt.frame["race" + CODE_SUFFIX]) == [0, 1, 0, 2, 0]
    assert pt.sensitive_encoding["race"] == {"White": 0, "Asian": 1, "Black": 2}


def test_binarize_privileged_is_one():
    pt = binarize_sensitive(encode_numerical(people()))
    assert pt.variant == "numerical_binary"
    assert list(pt.frame["race"]) == [1, 0, 1, 0, 1]
    assert list(pt.frame["sex"]) == [0, 1, 1, 0, 0]
    assert pt.schema.privileged("race") == "1"


def test_binarize_is_idempotent():
    once = binarize_sensitive(encode_numerical(people()))
    twice = binarize_sensitive(once)
    assert twice.frame.equals(once.frame)
    assert twice.schema == once.schema


def test_binarize_needs_numerical_variant():
    with pytest.raises(PreprocessError):
        binarize_sensitive(as_original(people()))


@pytest.mark.parametrize("variant", ["original", "numerical", "numerical_binary"])
def test_variants_keep_rows_and_labels(variant):
    t = people()
    pt = make_variant(t, variant)
    assert pt.n_rows == t.n_rows
    assert np.array_equal(pt.labels, t.labels)


def test_original_feature_matrix_uses_codes():
    pt = as_original(people())
    X, names = pt.feature_matrix()
    assert names == ["color", "height"]
    assert X[:, 0].tolist() == [0, 1, 2, 0, 1]
    X2, names2 = pt.feature_matrix(sensitive_as_feature=True)
    assert names2 == ["color", "height", "race" + CODE_SUFFIX, "sex" + CODE_SUFFIX]


def test_numerical_features_are_numeric():
    pt = encode_numerical(people())
    X, names = pt.feature_matrix()
    assert X.dtype == float and "race" not in names


def test_naive_bayes_metrics_ignore_category_order():
    t = synth_generate(400, 0.3, 5)
    flipped = t.frame.iloc[::-1].reset_index(drop=True)
    t2 = type(t)(t.schema, flipped, t.report)
    results = []
    for table in (t, t2):
        pt = encode_numerical(table)
        X, names = pt.feature_matrix()
        order = np.argsort(names)  # align columns by name; only the encoding order differs
        X = X[:, order]
        if table is t2:
            X = X[::-1]
        model = learners.fit("gnb", X, pt.labels if table is t else pt.labels[::-1])
        pred = learners.predict(model, X)
        s = pt.frame["group"].to_numpy()
        s = s if table is t else s[::-1]
        y = pt.labels if table is t else pt.labels[::-1]
        results.append(full_metric_vector(PredictionSet(y, pred, s, "priv")))
    assert results[0] == results[1]


def test_train_size_is_ceiling():
    assert train_size(9, 2 / 3) == 6
    assert train_size(10, 2 / 3) == 7
    assert train_size(1000, 2 / 3) == 667


def test_nine_rows():
    plans = make_splits(9, n_splits=3, master_seed=1)
    for p in plans:
        assert len(p.train_indices) == 6 and len(p.test_indices) == 3


def test_split_defaults_and_seeds():
    plans = make_splits(100)
    assert len(plans) == 10
    assert [p.seed for p in plans] == [42 ^ i for i in range(10)]
    assert plans == make_splits(100)
    assert plans[0] != plans[1]


def test_split_errors():
    with pytest.raises(PreprocessError):
        make_splits(2, train_fraction=0.9)
    with pytest.raises(PreprocessError):
        make_splits(10, n_splits=0)
    with pytest.raises(PreprocessError):
        make_splits(10, train_fraction=1.0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(3, 500), seed=st.integers(0, 2**40), k=st.integers(1, 4))
def test_splits_partition_rows(n, seed, k):
    for p in make_splits(n, n_splits=k, master_seed=seed):
        both = np.concatenate([p.train_indices, p.test_indices])
        assert sorted(both.tolist()) == list(range(n))
        assert len(p.train_indices) == -(-2 * n // 3)


def test_processed_round_trip(tmp_path):
    t = combine_sensitive(people(), ["race", "sex"])
    for variant in ("original", "numerical", "numerical_binary"):
        pt = make_variant(t, variant)
        path = save_processed(pt, tmp_path)
        assert path.name == f"people_{variant}.csv"
        back = load_processed(tmp_path, "people", variant)
        assert back.frame.equals(pt.frame), variant
        assert back.schema.columns == pt.schema.columns
        assert back.encoding_map == pt.encoding_map
        X1, _ = pt.feature_matrix(True)
        X2, _ = back.feature_matrix(True)
        assert np.array_equal(X1, X2)


def test_processed_bytes_are_stable(tmp_path):
    pt = make_variant(people(), "numerical")
    save_processed(pt, tmp_path / "a")
    save_processed(load_processed(tmp_path / "a", "people", "numerical"), tmp_path / "b")
    a = (tmp_path / "a" / "processed" / "people_numerical.csv").read_bytes()
    b = (tmp_path / "b" / "processed" / "people_numerical.csv").read_bytes()
    assert a == b


def test_splits_round_trip(tmp_path):
    plans = make_splits(50, n_splits=4, master_seed=7)
    path = save_splits(plans, tmp_path, "people", 7)
    assert path.name == "people_7.csv"
    assert path.read_text().splitlines()[0] == "split_id,row_index,partition"
    assert load_splits(tmp_path, "people", 7) == plans
