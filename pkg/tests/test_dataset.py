import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset, random_dataset
from rfrules.dataset import (Dataset, generate_xor, load_csv, load_csv_like,
                             quantile_discretize, save_csv, stratified_split)

ABC = [("A", ("a1", "a2")), ("B", ("b1", "b2", "b3"))]


def small_ds():
    rows = [["a1", "b1"], ["a2", "b2"], ["a1", "b3"], ["a2", "b1"]]
    return make_dataset(ABC, ("no", "yes"), rows, ["no", "yes", "yes", "no"])


def test_dataset_properties():
    ds = small_ds()
    assert ds.n == 4 and ds.p == 2 and ds.n_classes == 2
    assert ds.attribute_names == ("A", "B")
    assert ds.levels(1) == ("b1", "b2", "b3") and ds.n_levels(1) == 3
    assert ds.level_counts == (2, 3) and ds.total_levels == 5
    assert np.array_equal(ds.class_counts(), [2, 2])


def test_subset_and_schema():
    ds = small_ds()
    sub = ds.subset([0, 2])
    assert sub.n == 2
    assert np.array_equal(sub.labels, ds.labels[[0, 2]])
    assert sub.same_schema(ds)
    other = make_dataset(ABC, ("yes", "no"), [["a1", "b1"]], ["no"])
    assert not other.same_schema(ds)  # class levels reordered


def test_validation_rejects_bad_shapes():
    ds = small_ds()
    with pytest.raises(ValueError):
        Dataset(ds.attributes, ds.class_name, ds.class_levels, ds.rows, ds.labels[:-1])
    bad = ds.rows.copy()
    bad[0, 1] = 9
    with pytest.raises(ValueError):
        Dataset(ds.attributes, ds.class_name, ds.class_levels, bad, ds.labels)


# --------------------------------------------------------------- CSV loading

def test_load_csv_roundtrip(tmp_path):
    ds = small_ds()
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    again = load_csv(path)
    assert again.same_schema(ds)
    assert np.array_equal(again.rows, ds.rows)
    assert np.array_equal(again.labels, ds.labels)


def test_load_csv_first_appearance_vocab(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("X,Y\nzebra,1\napple,0\nzebra,0\n")
    ds = load_csv(path)
    assert ds.levels(0) == ("zebra", "apple")
    assert ds.class_levels == ("1", "0")


def test_load_csv_target_by_name(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("Y,X\nyes,u\nno,v\n")
    ds = load_csv(path, target="Y")
    assert ds.class_name == "Y" and ds.attribute_names == ("X",)


@pytest.mark.parametrize("text,msg", [
    ("", "empty file"),
    ("onlyone\nv\n", "at least one attribute"),
    ("X,Y\n", "no data rows"),
    ("X,Y\nu\n", "row 2 has 1 fields"),
    ("X,Y\nu,\n", "empty cell"),
])
def test_load_csv_errors(tmp_path, text, msg):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError, match=msg):
        load_csv(path)


def test_load_csv_missing_target(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("X,Y\nu,1\n")
    with pytest.raises(ValueError, match="target column 'Z' not found"):
        load_csv(path, target="Z")


def test_load_csv_like_matches_columns_by_name(tmp_path):
    ds = small_ds()
    path = tmp_path / "d.csv"
    path.write_text("Y,B,A\nyes,b3,a1\nno,b1,a2\n")
    got = load_csv_like(path, ds)
    assert got.same_schema(ds)
    assert np.array_equal(got.rows, [[0, 2], [1, 0]])
    assert np.array_equal(got.labels, [1, 0])


def test_load_csv_like_rejects_unknown_levels(tmp_path):
    ds = small_ds()
    path = tmp_path / "d.csv"
    path.write_text("A,B,Y\na1,b9,yes\n")
    with pytest.raises(ValueError, match="unknown level 'b9'"):
        load_csv_like(path, ds)
    path.write_text("A,B,Y\na1,b1,maybe\n")
    with pytest.raises(ValueError, match="unknown class level 'maybe'"):
        load_csv_like(path, ds)


def test_load_csv_like_missing_column(tmp_path):
    ds = small_ds()
    path = tmp_path / "d.csv"
    path.write_text("A,Y\na1,yes\n")
    with pytest.raises(ValueError, match="column 'B' not found"):
        load_csv_like(path, ds)


# ----------------------------------------------------------------- generator

def test_generate_xor_structure():
    ds = generate_xor(seed=0, n=840)
    assert ds.n == 840
    assert ds.attribute_names == ("A", "B", "C")
    assert ds.class_levels == ("0", "1")
    a, b, c = ds.rows[:, 0], ds.rows[:, 1], ds.rows[:, 2]
    # class is the parity pattern of (A, B), exactly
    assert np.array_equal(ds.labels, ((a + b) % 2 == 0).astype(np.int64))
    # C is fully determined by the (A, B) block
    assert np.array_equal(c, np.where((a >= 2) & (b >= 2), 0, 1))
    # near-uniform cells: 840 / 16 rows each
    cells = np.bincount(a * 4 + b, minlength=16)
    assert cells.min() >= 52 and cells.max() <= 53 and cells.sum() == 840


def test_generate_xor_seeds():
    assert np.array_equal(generate_xor(seed=3, n=160).rows,
                          generate_xor(seed=3, n=160).rows)
    assert not np.array_equal(generate_xor(seed=3, n=160).rows,
                              generate_xor(seed=4, n=160).rows)
    with pytest.raises(ValueError):
        generate_xor(n=15)


# --------------------------------------------------------------------- split

def test_stratified_split_counts():
    ds = generate_xor(seed=0, n=840)
    train, test = stratified_split(ds, 0.7, seed=0)
    assert train.n == round(0.7 * 840)
    assert train.n + test.n == ds.n
    for k in range(ds.n_classes):
        total = int((ds.labels == k).sum())
        got = int((train.labels == k).sum())
        assert abs(got - 0.7 * total) <= 1
        assert 1 <= got <= total - 1


def test_stratified_split_partitions_instances():
    rng = np.random.default_rng(5)
    for trial in range(10):
        ds = random_dataset(rng, n=int(rng.integers(10, 60)), n_classes=int(rng.integers(2, 4)))
        ratio = float(rng.uniform(0.2, 0.8))
        train, test = stratified_split(ds, ratio, seed=trial)
        # row multisets must partition the original rows
        key = lambda d: sorted(map(tuple, np.column_stack([d.rows, d.labels]).tolist()))
        assert sorted(key(train) + key(test)) == key(ds)


def test_stratified_split_errors():
    ds = small_ds()
    with pytest.raises(ValueError):
        stratified_split(ds, 0.0)
    with pytest.raises(ValueError):
        stratified_split(ds, 1.0)
    lonely = make_dataset(ABC, ("no", "yes"),
                          [["a1", "b1"], ["a1", "b2"], ["a2", "b1"]],
                          ["no", "no", "yes"])
    with pytest.raises(ValueError, match="need at least 2"):
        stratified_split(lonely, 0.5)


def test_stratified_split_deterministic():
    ds = generate_xor(seed=1, n=320)
    t1, _ = stratified_split(ds, 0.7, seed=9)
    t2, _ = stratified_split(ds, 0.7, seed=9)
    t3, _ = stratified_split(ds, 0.7, seed=10)
    assert np.array_equal(t1.rows, t2.rows)
    assert not np.array_equal(t1.rows, t3.rows)


# ------------------------------------------------------------- discretization

def test_quantile_discretize_bins():
    X = np.array([[1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0], [8.0]])
    ds = quantile_discretize(X, ["a"] * 4 + ["b"] * 4, bins=4)
    assert ds.p == 1 and ds.n == 8
    assert ds.n_levels(0) == 4
    assert ds.levels(0)[0].startswith("(-inf,")
    # monotone: sorted values land in nondecreasing bins
    assert list(ds.rows[:, 0]) == sorted(ds.rows[:, 0])


def test_quantile_discretize_constant_column_warns():
    with pytest.warns(UserWarning, match="no usable quantile cuts"):
        ds = quantile_discretize(np.ones((6, 1)), ["a", "b"] * 3, bins=4)
    assert ds.n_levels(0) == 1


def test_quantile_discretize_errors():
    with pytest.raises(ValueError, match="non-finite"):
        quantile_discretize(np.array([[1.0], [np.nan]]), ["a", "b"])
    with pytest.raises(ValueError, match="bins"):
        quantile_discretize(np.array([[1.0], [2.0]]), ["a", "b"], bins=1)
    with pytest.raises(ValueError, match="y length"):
        quantile_discretize(np.array([[1.0], [2.0]]), ["a"])
