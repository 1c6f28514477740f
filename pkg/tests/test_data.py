import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbench import data
from fairbench.data import (
    DataError,
    SchemaError,
    apply_dataset_transforms,
    builtin_schema,
    builtin_schema_names,
    load_dataset,
    load_prepared,
    parse_schema,
    serialize_table,
    synth_generate,
)

TOY_SCHEMA = """
[dataset]
name = toy
positive_label = yes
missing_token = ?
sensitive = race:W

[columns]
color = categorical feature
score = numeric feature
race = categorical sensitive
junk = numeric drop
outcome = categorical label

[filters]
score_range = score between 0 10
no_red = color != red
"""

TOY_CSV = b"""color,score,race,junk,outcome
green,1.5,W,0,yes
red,2,B,1,no
blue,?,W,2,yes
blue,11,B,3,no
green,3,B,4,no
blue,4.25,W,5,yes
"""


def toy():
    return load_dataset(parse_schema(TOY_SCHEMA), TOY_CSV)


def test_load_drops_missing_then_filters_in_order():
    t = toy()
    assert t.n_rows == 3
    assert t.report == {
        "rows_in": 6,
        "dropped_missing": 1,
        "dropped_by_filter": {"score_range": 1, "no_red": 1},
        "rows_out": 3,
    }
    assert list(t.frame["color"]) == ["green", "green", "blue"]
    assert list(t.labels) == [1, 0, 1]
    assert "junk" not in t.frame.columns


def test_load_accepts_path_and_file_object(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_bytes(TOY_CSV)
    schema = parse_schema(TOY_SCHEMA)
    a = load_dataset(schema, p)
    b = load_dataset(schema, io.BytesIO(TOY_CSV))
    assert a.equals(b) and a.equals(toy())


def test_numeric_cells_are_float_and_categorical_str():
    t = toy()
    assert t.frame["score"].dtype == float
    assert t.frame["score"].tolist() == [1.5, 3.0, 4.25]
    assert all(isinstance(v, str) for v in t.frame["race"])


def test_unknown_column_is_an_error():
    with pytest.raises(DataError, match="unknown column"):
        load_dataset(parse_schema(TOY_SCHEMA), b"color,score,race,outcome\ngreen,1,W,yes\n")


def test_non_binary_label_is_an_error():
    src = b"color,score,race,junk,outcome\ngreen,1,W,0,yes\nblue,2,B,0,no\nblue,3,W,0,maybe\n"
    with pytest.raises(DataError, match="not binary"):
        load_dataset(parse_schema(TOY_SCHEMA), src)


def test_empty_result_is_an_error():
    src = b"color,score,race,junk,outcome\nred,1,W,0,yes\n"
    with pytest.raises(DataError, match="no rows left"):
        load_dataset(parse_schema(TOY_SCHEMA), src)


def test_duplicate_header_first_occurrence_wins():
    src = b"color,score,race,junk,outcome,score\ngreen,1,W,0,yes,99\nblue,2,W,0,no,98\n"
    t = load_dataset(parse_schema(TOY_SCHEMA), src)
    assert t.frame["score"].tolist() == [1.0, 2.0]


def test_label_threshold_at_boundary():
    schema = builtin_schema("ricci")
    header = ",".join(c.name for c in schema.columns)
    assert header == "Position,Oral,Written,Race,Combine"
    src = f"{header}\nCaptain,70,69.8,W,69.9\nCaptain,60,80,B,70\nLieutenant,90,80,W,85\n".encode()
    t = load_dataset(schema, src)
    assert list(t.labels) == [0, 1, 1]


def test_reserialized_output_reloads_identically():
    t = toy()
    text = serialize_table(t)
    again = load_dataset(t.schema, text.encode())
    assert again.equals(t)
    assert serialize_table(again) == text


def test_loading_does_not_mutate_source_table():
    t = toy()
    before = t.frame.copy()
    apply_dataset_transforms(t)
    assert t.frame.equals(before)


def test_schema_validation():
    with pytest.raises(SchemaError, match="exactly one label"):
        parse_schema("[dataset]\nname = x\npositive_label = 1\nsensitive = s:a\n[columns]\ns = categorical sensitive\n")
    with pytest.raises(SchemaError, match="not a sensitive column"):
        parse_schema(
            "[dataset]\nname = x\npositive_label = 1\nsensitive = f:a\n"
            "[columns]\nf = categorical feature\ns = categorical sensitive\ny = categorical label\n"
        )
    with pytest.raises(SchemaError, match="unknown kind"):
        data.ColumnSpec("a", "text", "feature")


def test_privileged_value_must_be_observed():
    src = b"color,score,race,junk,outcome\ngreen,1,B,0,yes\nblue,2,B,0,no\n"
    with pytest.raises(DataError, match="privileged value"):
        load_dataset(parse_schema(TOY_SCHEMA), src)


def test_builtin_schemas_parse():
    assert builtin_schema_names() == [
        "adult", "german", "propublica_recidivism", "propublica_violent", "ricci",
    ]
    for name in builtin_schema_names():
        s = builtin_schema(name)
        assert s.name == name
        assert len(s.names("label")) == 1


def german_row(**over):
    row = dict(zip(data.GERMAN_COLUMNS, [
        "A11", "6", "A34", "A43", "1169", "A65", "A75", "4", "A93", "A101",
        "4", "A121", "67", "A143", "A152", "2", "A173", "1", "A192", "A201", "1",
    ]))
    row.update(over)
    return row


def german_source(rows):
    lines = [",".join(data.GERMAN_COLUMNS)]
    lines += [",".join(r[c] for c in data.GERMAN_COLUMNS) for r in rows]
    return ("\n".join(lines) + "\n").encode()


def test_german_transforms_age_and_sex():
    rows = [
        german_row(age="25", personal_status="A92", credit="1"),
        german_row(age="24", personal_status="A93", credit="2"),
        german_row(age="40", personal_status="A91", credit="1"),
        german_row(age="19", personal_status="A95", credit="2"),
    ]
    t = load_prepared(builtin_schema("german"), german_source(rows))
    assert list(t.frame["age"]) == ["adult", "youth", "adult", "youth"]
    assert list(t.frame["sex"]) == ["female", "male", "male", "female"]
    assert list(t.labels) == [1, 0, 1, 0]
    # personal_status stays a feature next to the derived sex column
    assert "personal_status" in t.schema.names("feature")
    assert len([c for c in t.schema.columns if c.role != "label"]) == 21


def test_german_has_twenty_attributes():
    assert len(data.GERMAN_COLUMNS) == 21  # 20 attributes + credit label


def test_unmapped_personal_status_errors():
    schema = builtin_schema("german")
    rows = [german_row(personal_status="A99")]
    with pytest.raises(DataError, match="no mapping"):
        load_prepared(schema, german_source(rows))


PROPUBLICA_HEADER = (
    "sex,age,age_cat,race,juv_fel_count,juv_misd_count,juv_other_count,priors_count,"
    "c_charge_degree,c_charge_desc,decile_score,days_b_screening_arrest,is_recid,score_text,two_year_recid"
)


def test_propublica_filters_report_each_drop():
    schema = builtin_schema("propublica_recidivism")
    wanted = [c.name for c in schema.columns]
    assert set(wanted) <= set(PROPUBLICA_HEADER.split(","))
    base = "Male,30,25 - 45,African-American,0,0,0,1,F,Battery,7,{d},{r},{s},1"
    rows = [
        base.format(d=0, r=1, s="High"),
        base.format(d=31, r=1, s="High"),  # screening offset out of range
        base.format(d=-30, r=-1, s="Low"),  # no recidivism info
        base.format(d=-30, r=0, s="N/A"),  # no score
        base.replace(",F,", ",O,").format(d=1, r=0, s="Low"),  # ordinary traffic
        "Female,40,25 - 45,Caucasian,0,0,0,0,M,Theft,2,5,0,Low,0",
        "Female,40,25 - 45,Caucasian,0,0,0,0,M,,2,5,0,Low,0",  # missing charge text
    ]
    src = (PROPUBLICA_HEADER + "\n" + "\n".join(rows) + "\n").encode()
    t = load_prepared(schema, src)
    assert t.n_rows == 2
    r = t.report
    assert r["dropped_missing"] == 1
    assert sum(r["dropped_by_filter"].values()) == 4
    assert all(v == 1 for v in r["dropped_by_filter"].values())
    # positive label = no two-year recidivism
    assert list(t.labels) == [0, 1]


def test_synth_is_deterministic_and_biased():
    a = synth_generate(500, 0.4, 3)
    b = synth_generate(500, 0.4, 3)
    assert serialize_table(a) == serialize_table(b)
    t = synth_generate(10000, 0.4, 7)
    y = t.labels
    priv = t.frame["group"].to_numpy() == "priv"
    cv = 1 - (y[priv].mean() - y[~priv].mean())
    assert abs(cv - 0.6) <= 0.03


def test_synth_no_bias_gives_unit_di():
    t = synth_generate(20000, 0.0, 1)
    y = t.labels
    priv = t.frame["group"].to_numpy() == "priv"
    assert abs(y[~priv].mean() / y[priv].mean() - 1) < 0.05


def test_synth_needs_twenty_rows():
    with pytest.raises(ValueError):
        synth_generate(19, 0.1, 0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(20, 200), bias=st.floats(0, 1), seed=st.integers(0, 2**32))
def test_synth_tables_are_valid(n, bias, seed):
    t = synth_generate(n, bias, seed)
    assert t.n_rows == n
    assert set(np.unique(t.labels)) <= {0, 1}
    assert np.isfinite(t.frame["x_signal"].to_numpy()).all()


def test_convert_uci_whitespace(tmp_path):
    src = tmp_path / "german.data"
    src.write_text("A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1\n")
    n = data.convert_uci(src, tmp_path / "german.csv", data.GERMAN_COLUMNS, None)
    assert n == 1
    t = load_prepared(builtin_schema("german"), tmp_path / "german.csv")
    assert t.n_rows == 1 and t.frame["sex"].iloc[0] == "male"


def test_convert_uci_checks_width(tmp_path):
    src = tmp_path / "bad.data"
    src.write_text("1, 2, 3\n")
    with pytest.raises(DataError):
        data.convert_uci(src, tmp_path / "out.csv", data.ADULT_COLUMNS, ",")
