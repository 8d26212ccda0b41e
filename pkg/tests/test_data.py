import numpy as np
import pytest

from ecceval.data import (
    BoundsSource,
    Dataset,
    Interaction,
    ValueBounds,
    load_interactions,
    rating_bounds,
    save_csv,
    split_train_test,
    write_split,
)
from ecceval.errors import DataError


def make_dataset(rows, name="t", bounds=None):
    return Dataset(
        name=name,
        users=tuple(r[0] for r in rows),
        items=tuple(r[1] for r in rows),
        values=np.array([r[2] for r in rows], dtype=float),
        declared_bounds=bounds,
    )


class TestTypes:
    def test_interaction_validation(self):
        with pytest.raises(ValueError):
            Interaction("", "x", 1.0)
        with pytest.raises(ValueError):
            Interaction("a", "x", float("nan"))

    def test_bounds_degenerate(self):
        with pytest.raises(DataError):
            ValueBounds(3.0, 3.0)

    def test_dataset_rejects_out_of_bounds_values(self):
        with pytest.raises(DataError):
            make_dataset([("a", "x", 9.0)], bounds=(1.0, 5.0))

    def test_dataset_keeps_duplicates(self):
        ds = make_dataset([("a", "x", 4.0), ("a", "x", 2.0)])
        assert len(ds) == 2
        assert ds.n_users == 1 and ds.n_items == 1

    def test_dense_indices_follow_first_appearance(self):
        ds = make_dataset([("b", "y", 1.0), ("a", "x", 2.0), ("b", "x", 3.0)])
        assert ds.user_index == {"b": 0, "a": 1}
        assert ds.item_index == {"y": 0, "x": 1}
        assert list(ds.user_codes()) == [0, 1, 0]


class TestLoad:
    def test_csv_basic(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("user_id,item_id,value\na,x,4\na,y,2\n")
        ds = load_interactions(path, format="csv")
        assert len(ds) == 2
        assert ds.n_users == 1 and ds.n_items == 2
        assert ds.values.tolist() == [4.0, 2.0]

    def test_csv_bad_value_names_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("user_id,item_id,value\na,x,notanumber\n")
        with pytest.raises(DataError, match="line 2"):
            load_interactions(path, format="csv")

    def test_csv_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DataError):
            load_interactions(path, format="csv")

    def test_csv_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("user_id,item_id,value\n")
        with pytest.raises(DataError, match="no interactions"):
            load_interactions(path, format="csv")

    def test_csv_wrong_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("u,i,v\na,x,1\n")
        with pytest.raises(DataError, match="line 1"):
            load_interactions(path, format="csv")

    def test_movielens_double_colon(self, tmp_path):
        path = tmp_path / "r.dat"
        path.write_text("1::10::4::881250949\n2::10::3::881250950\n")
        ds = load_interactions(path, format="movielens_dat")
        assert len(ds) == 2
        assert ds.users == ("1", "2")
        assert ds.values.tolist() == [4.0, 3.0]

    def test_movielens_tab_separated(self, tmp_path):
        path = tmp_path / "u.data"
        path.write_text("1\t10\t4\t881250949\n")
        ds = load_interactions(path, format="movielens_dat")
        assert ds.items == ("10",)

    def test_movielens_bad_row(self, tmp_path):
        path = tmp_path / "r.dat"
        path.write_text("1::10::4::1\n1::11\n")
        with pytest.raises(DataError, match="line 2"):
            load_interactions(path, format="movielens_dat")

    def test_row_order_preserved(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = [f"u{i % 7},i{i % 11},{(i % 5) + 1}" for i in range(50)]
        path.write_text("user_id,item_id,value\n" + "\n".join(rows) + "\n")
        ds = load_interactions(path, format="csv")
        assert ds.users[0] == "u0" and ds.users[-1] == "u0"
        assert [f"u{i % 7}" for i in range(50)] == list(ds.users)


class TestRoundTrip:
    def test_save_load_identity(self, tmp_path):
        rng = np.random.default_rng(4)
        rows = [
            (f"u{rng.integers(20)}", f"i{rng.integers(30)}", float(rng.uniform(1, 5)))
            for _ in range(200)
        ]
        ds = make_dataset(rows)
        path = tmp_path / "rt.csv"
        save_csv(ds, path)
        again = load_interactions(path, format="csv")
        assert again == ds

    def test_split_files(self, tmp_path):
        ds = make_dataset([(f"u{i}", "x", float(i % 4 + 1)) for i in range(20)])
        train, test = split_train_test(ds, 0.25, seed=7)
        tp, sp = write_split(train, test, tmp_path, "demo")
        assert load_interactions(tp) == train
        assert load_interactions(sp) == test


class TestSplit:
    def test_rounding(self):
        ds = make_dataset([(f"u{i}", "x", 1.0 + i % 4) for i in range(10)])
        train, test = split_train_test(ds, 0.1, seed=0)
        assert len(train) == 9 and len(test) == 1

    def test_large_fraction_counts(self):
        ds = make_dataset([(f"u{i}", f"i{i}", float(i % 5 + 1)) for i in range(1000)])
        train, test = split_train_test(ds, 0.1, seed=3)
        assert len(test) == 100 and len(train) == 900

    def test_determinism(self):
        ds = make_dataset([(f"u{i}", "x", 1.0 + i % 4) for i in range(50)])
        a = split_train_test(ds, 0.3, seed=42)
        b = split_train_test(ds, 0.3, seed=42)
        assert a[0] == b[0] and a[1] == b[1]

    def test_partition_property_many_seeds(self):
        rows = [(f"u{i % 9}", f"i{i % 5}", float(i % 5 + 1)) for i in range(60)]
        ds = make_dataset(rows)
        for seed in range(25):
            train, test = split_train_test(ds, 0.37, seed=seed)
            merged = sorted(
                list(zip(train.users, train.items, train.values))
                + list(zip(test.users, test.items, test.values))
            )
            assert merged == sorted(rows)

    def test_bad_fraction(self):
        ds = make_dataset([("a", "x", 1.0), ("b", "y", 2.0)])
        for f in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                split_train_test(ds, f, seed=0)


class TestBounds:
    def test_declared_wins(self):
        ds = make_dataset([("a", "x", 2.0), ("b", "y", 3.0)], bounds=(1.0, 5.0))
        train, test = split_train_test(ds, 0.5, seed=0)
        vb = rating_bounds(train, test)
        assert (vb.min_value, vb.max_value) == (1.0, 5.0)
        assert vb.source is BoundsSource.DECLARED

    def test_inferred_union(self):
        train = make_dataset([("a", "x", 2.0), ("b", "y", 3.0)])
        test = make_dataset([("c", "z", 4.5)])
        vb = rating_bounds(train, test)
        assert (vb.min_value, vb.max_value) == (2.0, 4.5)
        assert vb.source is BoundsSource.INFERRED

    def test_constant_dataset_degenerate(self):
        train = make_dataset([("a", "x", 3.0)])
        test = make_dataset([("b", "y", 3.0)])
        with pytest.raises(DataError):
            rating_bounds(train, test)

    def test_containment_property(self):
        rng = np.random.default_rng(11)
        rows = [
            (f"u{rng.integers(5)}", f"i{rng.integers(5)}", float(rng.uniform(-3, 7)))
            for _ in range(80)
        ]
        ds = make_dataset(rows)
        train, test = split_train_test(ds, 0.4, seed=1)
        vb = rating_bounds(train, test)
        assert vb.contains(train.values) and vb.contains(test.values)
