import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edm_select.classifiers import nb_train
from edm_select.dataset import (
    MISSING,
    AttributeSchema,
    DatasetError,
    EmptyDatasetError,
    ParseError,
    SyntheticConfig,
    UnsupportedFeatureError,
    contingency,
    generate_synthetic,
    informative_attributes,
    one_hot_encode,
    parse_table,
    project,
    stratified_folds,
    to_csv,
)
from edm_select.evaluation import cross_validate
from edm_select.filters import symmetrical_uncertainty

from conftest import make_dataset

CSV = b"colour,size,label\nred,big,yes\nblue,small,no\nred,small,yes\ngreen,big,no\n"


def test_parse_csv_basic():
    d = parse_table(CSV, "csv")
    assert len(d.schema) == 3
    assert d.n_rows == 4
    assert d.class_index == 2
    assert d.schema[0].values == ("red", "blue", "green")
    assert d.class_attribute.values == ("yes", "no")
    assert d.positive_class == 0


def test_parse_csv_missing_cell():
    d = parse_table(b"a,b,c\nx,?,p\ny,z,q\n")
    assert d.rows[0, 1] == MISSING
    assert d.schema[1].values == ("z",)


def test_parse_csv_from_stream_and_overrides():
    d = parse_table(io.BytesIO(CSV), "csv", class_attr="colour", positive="green")
    assert d.class_index == 0
    assert d.class_attribute.values[d.positive_class] == "green"


def test_parse_arff_declared_order():
    text = b"""% comment
@RELATION weather
@attribute outlook {sunny,overcast,rainy}
@Attribute play {yes, no}
@data
rainy,yes
sunny,no
"""
    d = parse_table(text, "arff")
    assert d.schema[0] == AttributeSchema("outlook", ("sunny", "overcast", "rainy"), 0)
    assert d.schema[1].values == ("yes", "no")
    assert d.rows.tolist() == [[2, 0], [0, 1]]
    assert d.relation == "weather"


def test_ragged_row_reports_row_number():
    with pytest.raises(ParseError, match="row 3"):
        parse_table(b"a,b\nx,y\nx\n")


def test_unknown_arff_section():
    with pytest.raises(UnsupportedFeatureError):
        parse_table(b"@relation r\n@attribute a {x,y}\n@inputs a\n@data\nx\n", "arff")


def test_numeric_arff_attribute_unsupported():
    with pytest.raises(UnsupportedFeatureError):
        parse_table(b"@relation r\n@attribute a numeric\n@data\n1\n", "arff")


@pytest.mark.parametrize("data", [b"", b"   \n", b"a,b,c\n"])
def test_empty_input(data):
    with pytest.raises(EmptyDatasetError):
        parse_table(data)


def test_undeclared_arff_value():
    with pytest.raises(ParseError, match="row 4"):
        parse_table(b"@relation r\n@attribute a {x,y}\n@data\nz\n", "arff")


def test_missing_class_value_rejected():
    with pytest.raises(ParseError):
        parse_table(b"a,c\nx,?\ny,p\n")


def test_schema_rejects_reserved_token():
    with pytest.raises(DatasetError):
        AttributeSchema("a", ("x", "?"), 0)


def test_csv_round_trip():
    d = parse_table(CSV)
    assert parse_table(to_csv(d).encode()) == d


# ---------------------------------------------------------------- project

def test_project_all_predictors_is_identity(weather):
    assert project(weather, weather.predictors) == weather


def test_project_order_is_canonical(weather):
    assert project(weather, [3, 0]) == project(weather, [0, 3])
    assert [a.name for a in project(weather, [3, 0]).schema] == ["outlook", "windy", "play"]


def test_project_empty_keeps_class(weather):
    p = project(weather, [])
    assert len(p.schema) == 1
    assert p.class_index == 0
    assert np.array_equal(p.y, weather.y)


def test_project_table4_cb9():
    d = generate_synthetic(SyntheticConfig(n_rows=50, seed=1))
    cb9 = [17, 1, 21, 18, 20, 32, 13, 7, 28]  # 1-based attribute numbers
    p = project(d, [n - 1 for n in cb9])
    assert len(p.predictors) == 9
    assert p.class_attribute.name == "HSCGrade"
    assert {a.name for a in p.schema[:-1]} == {
        "StMe", "SEX", "MED", "XMark-Grade", "LOC-SCH", "MSAL", "TransSchool", "LArea", "FOCC"}


def test_project_errors(weather):
    with pytest.raises(ValueError):
        project(weather, [0, weather.class_index])
    with pytest.raises(ValueError):
        project(weather, [0, 17])
    with pytest.raises(ValueError):
        project(weather, [1, 1])


def test_project_idempotent(weather):
    once = project(weather, [2, 0])
    assert project(once, once.predictors) == once


# ---------------------------------------------------------------- folds

def test_folds_balanced_toy():
    d = make_dataset([np.zeros(10, int), [0, 1] * 5])
    f = stratified_folds(d, 5, seed=3)
    for k in range(5):
        _, test = f.split(k)
        assert sorted(d.y[test].tolist()) == [0, 1]


def test_folds_deterministic():
    d = generate_synthetic(SyntheticConfig(n_rows=300, seed=0))
    a = stratified_folds(d, 10, 7)
    b = stratified_folds(d, 10, 7)
    assert np.array_equal(a.labels, b.labels)


def test_folds_sizes_1969():
    d = generate_synthetic(SyntheticConfig(seed=5))
    f = stratified_folds(d, 10, 1)
    assert set(f.sizes().tolist()) == {196, 197}


def test_too_many_folds():
    d = make_dataset([[0, 1, 0], [0, 1, 1]])
    with pytest.raises(ValueError):
        stratified_folds(d, 4, 0)
    with pytest.raises(ValueError):
        stratified_folds(d, 1, 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=6, max_size=80), st.integers(2, 6), st.integers(0, 2**16))
def test_fold_invariants(classes, n_folds, seed):
    n = len(classes)
    if n_folds > n:
        return
    d = make_dataset([np.zeros(n, int), classes], arities=[2, 3])
    f = stratified_folds(d, n_folds, seed)
    sizes = f.sizes()
    assert sizes.sum() == n
    assert sizes.max() - sizes.min() <= 1
    counts = d.class_counts()
    for k in range(n_folds):
        _, test = f.split(k)
        per = np.bincount(d.y[test], minlength=3)
        assert np.all(np.abs(per - counts / n_folds) < 1 + 1e-9)


# ---------------------------------------------------------------- one-hot

def test_one_hot_columns_and_mapping():
    d = make_dataset([[1, 0, MISSING], [0, 1, 1], [0, 1, 0]], arities=[3, 2, 2])
    m = one_hot_encode(d)
    assert m.n_columns == 5
    assert m.rows[0].tolist() == [0, 1, 0, 1, 0]
    assert m.rows[2, :3].tolist() == [0, 0, 0]
    assert m.column_map[(0, 1)] == 1
    assert m.labels.tolist() == [1, -1, 1]


def test_one_hot_needs_binary_class():
    d = make_dataset([[0, 1, 1], [0, 1, 2]])
    with pytest.raises(UnsupportedFeatureError):
        one_hot_encode(d)


def test_one_hot_blocks_sum_to_zero_or_one():
    d = generate_synthetic(SyntheticConfig(n_rows=200, seed=9))
    rows = d.rows.copy()
    rows[::7, 3] = MISSING
    d2 = type(d)(d.schema, rows, d.class_index)
    m = one_hot_encode(d2)
    start = 0
    for p in d2.predictors:
        width = d2.schema[p].arity
        sums = m.rows[:, start:start + width].sum(axis=1)
        assert set(np.unique(sums)) <= {0.0, 1.0}
        start += width


# ---------------------------------------------------------------- synthetic

def test_synthetic_schema_matches_table1():
    d = generate_synthetic(SyntheticConfig(n_rows=20))
    names = [a.name for a in d.schema]
    assert len(names) == 33
    assert names[0] == "SEX" and names[17] == "XMark-Grade" and names[31] == "MSAL"
    assert names[-1] == "HSCGrade"
    assert d.class_attribute.values == ("pass", "fail")


def test_synthetic_deterministic():
    a = generate_synthetic(SyntheticConfig(seed=42))
    b = generate_synthetic(SyntheticConfig(seed=42))
    assert to_csv(a).encode() == to_csv(b).encode()
    assert to_csv(a) != to_csv(generate_synthetic(SyntheticConfig(seed=43)))


def test_full_signal_determines_class():
    d = generate_synthetic(SyntheticConfig(n_rows=500, n_informative=1, signal=1.0, seed=3))
    a = informative_attributes(1)[0]
    t = contingency(d, a).counts
    assert np.all((t == 0).any(axis=1))  # every value seen with one class only
    assert symmetrical_uncertainty(contingency(d, a)) == pytest.approx(1.0)


def test_zero_signal_su_vanishes():
    d = generate_synthetic(SyntheticConfig(n_rows=20000, signal=0.0, seed=4))
    su = [symmetrical_uncertainty(contingency(d, a)) for a in d.predictors]
    assert max(su) < 2e-3


def test_zero_signal_nb_auc_is_chance():
    d = generate_synthetic(SyntheticConfig(n_rows=10000, signal=0.0, seed=11))
    res = cross_validate(d, nb_train, stratified_folds(d, 10, 11))
    assert abs(res.metrics.roc_value - 0.5) < 0.03


@pytest.mark.parametrize("kw", [dict(n_informative=33), dict(signal=1.5), dict(pass_rate=0.0),
                                dict(pass_rate=1.0), dict(n_rows=0)])
def test_synthetic_config_validation(kw):
    with pytest.raises(ValueError):
        SyntheticConfig(**kw)


# ---------------------------------------------------------------- contingency

def test_contingency_single_value():
    d = make_dataset([[0, 0, 0, 0], [0, 1, 1, 0]], arities=[1, 2])
    t = contingency(d, 0)
    assert t.counts.shape == (1, 2)
    assert t.row_sums.tolist() == [4]


def test_contingency_weather_outlook(weather):
    # hand count: sunny 2 yes/3 no, overcast 4/0, rainy 3/2
    t = contingency(weather, 0)
    assert t.counts.tolist() == [[2, 3], [4, 0], [3, 2]]
    assert t.total == 14


def test_contingency_keeps_unseen_value_row():
    d = make_dataset([[0, 2, 0], [0, 1, 1]], arities=[3, 2])
    assert contingency(d, 0).counts.tolist() == [[1, 1], [0, 0], [0, 1]]


def test_contingency_missing_is_own_row():
    d = make_dataset([[0, MISSING, 1, MISSING], [0, 1, 1, 0]], arities=[2, 2])
    assert contingency(d, 0).counts.tolist() == [[1, 0], [0, 1], [1, 1]]


def test_contingency_of_class_rejected(weather):
    with pytest.raises(ValueError):
        contingency(weather, weather.class_index)


def test_contingency_marginals():
    d = generate_synthetic(SyntheticConfig(n_rows=333, seed=2))
    for a in d.predictors:
        t = contingency(d, a)
        assert t.total == d.n_rows
        freq = np.bincount(d.rows[:, a], minlength=d.schema[a].arity)
        assert np.array_equal(t.row_sums, freq)
        assert np.array_equal(t.col_sums, d.class_counts())


def test_taper_strengths():
    cfg = SyntheticConfig(signal=0.4, taper=0.5, n_informative=5)
    assert cfg.strengths() == pytest.approx([0.4, 0.35, 0.3, 0.25, 0.2])
    assert SyntheticConfig(signal=0.4, taper=0.0, n_informative=3).strengths() == [0.4] * 3
    assert SyntheticConfig(n_informative=1, taper=1.0).strengths() == [SyntheticConfig.signal]
    with pytest.raises(ValueError):
        SyntheticConfig(taper=1.5)


def test_planted_total_variation_follows_taper():
    cfg = SyntheticConfig(n_rows=60000, signal=0.6, taper=0.5, n_informative=3, seed=8)
    d = generate_synthetic(cfg)
    y = d.y
    for attr, s in zip(informative_attributes(3), cfg.strengths()):
        arity = d.schema[attr].arity
        p0 = np.bincount(d.rows[y == 0, attr], minlength=arity) / np.sum(y == 0)
        p1 = np.bincount(d.rows[y == 1, attr], minlength=arity) / np.sum(y == 1)
        assert 0.5 * np.abs(p0 - p1).sum() == pytest.approx(s, abs=0.03)
