import numpy as np
import pytest
import scipy.stats
from helpers_oracle import ks_uniform_bruteforce

from ecceval.data import Dataset, ValueBounds
from ecceval.difficulty import dataset_ks, dump_difficulty_csv, entity_ks
from ecceval.errors import DataError

B15 = ValueBounds(1.0, 5.0)


def ds_from(rows):
    return Dataset(
        name="t",
        users=tuple(r[0] for r in rows),
        items=tuple(r[1] for r in rows),
        values=np.array([r[2] for r in rows], dtype=float),
    )


class TestEntityKS:
    def test_single_value_at_min(self):
        assert entity_ks([1.0], B15) == 1.0

    def test_single_value_at_max(self):
        assert entity_ks([5.0], B15) == 1.0

    def test_single_value_at_midpoint(self):
        assert entity_ks([3.0], B15) == 0.5

    def test_equally_spaced_grid_attains_minimum(self):
        # n values at min + (k - 0.5) * span / n deviate by exactly 1/(2n)
        for n in (1, 2, 5, 10, 100):
            grid = 1.0 + (np.arange(n) + 0.5) * 4.0 / n
            assert entity_ks(grid, B15) == pytest.approx(1 / (2 * n), abs=1e-12)

    def test_large_uniform_sample_small_statistic(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(1, 5, 10**5)
        assert entity_ks(values, B15) < 0.01

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 40))
            values = rng.uniform(1, 5, n)
            assert entity_ks(values, B15) == pytest.approx(
                ks_uniform_bruteforce(values, 1.0, 5.0), abs=1e-12
            )

    def test_matches_scipy_kstest(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            values = rng.uniform(1, 5, n)
            expected = scipy.stats.kstest(values, "uniform", args=(1.0, 4.0)).statistic
            assert entity_ks(values, B15) == pytest.approx(expected, abs=1e-12)

    def test_range_property(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            values = rng.uniform(1, 5, int(rng.integers(1, 30)))
            assert 0.0 <= entity_ks(values, B15) <= 1.0

    def test_out_of_bounds_rejected(self):
        with pytest.raises(DataError):
            entity_ks([0.5, 2.0], B15)

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(DataError):
            entity_ks([1.0], ValueBounds(2.0, 2.0))


class TestDatasetKS:
    def test_constant_entities_at_bound(self):
        rows = [("a", "x", 1.0), ("a", "y", 1.0), ("b", "x", 1.0), ("b", "y", 1.0)]
        report = dataset_ks(ds_from(rows), B15)
        assert report.dks_dataset == 1.0

    def test_uniform_grid_entities_near_minimum(self):
        rows = []
        n = 40
        grid = 1.0 + (np.arange(n) + 0.5) * 4.0 / n
        for u in ("a", "b"):
            for v in grid:
                rows.append((u, f"item-{u}-{v}", float(v)))
        report = dataset_ks(ds_from(rows), B15)
        # users sit at 1/(2n); single-observation items dominate the average
        for u in ("a", "b"):
            assert report.per_user_dks[u] == pytest.approx(1 / (2 * n), abs=1e-12)

    def test_unweighted_average(self):
        rows = [("a", "x", 1.0), ("b", "x", 3.0)]
        report = dataset_ks(ds_from(rows), B15)
        # users: KS(1.0)=1, KS(3.0)=0.5; item x: values {1,3} -> KS 0.5
        assert report.per_user_dks == {"a": 1.0, "b": 0.5}
        assert report.per_item_dks["x"] == pytest.approx(0.5)
        assert report.dks_dataset == pytest.approx((1.0 + 0.5 + 0.5) / 3)

    def test_invariant_to_row_order_and_ids(self):
        rng = np.random.default_rng(10)
        rows = [
            (f"u{rng.integers(6)}", f"i{rng.integers(6)}", float(rng.uniform(1, 5)))
            for _ in range(120)
        ]
        base = dataset_ks(ds_from(rows), B15).dks_dataset
        shuffled = [rows[k] for k in rng.permutation(len(rows))]
        assert dataset_ks(ds_from(shuffled), B15).dks_dataset == pytest.approx(
            base, abs=1e-12
        )
        relabeled = [(u + "_x", i + "_y", v) for u, i, v in rows]
        assert dataset_ks(ds_from(relabeled), B15).dks_dataset == pytest.approx(
            base, abs=1e-12
        )

    def test_monotone_in_concentration(self):
        # tighter per-entity spread means less uniform local distributions
        rng = np.random.default_rng(5)
        scores = []
        for sigma in (0.1, 0.3, 1.0, 3.0):
            rows = []
            for u in range(30):
                center = rng.uniform(1.8, 4.2)
                for k in range(30):
                    v = center + sigma * rng.standard_normal()
                    while not 1.0 <= v <= 5.0:
                        v = center + sigma * rng.standard_normal()
                    rows.append((f"u{u}", f"i{u}-{k}", float(v)))
            # only user statistics are comparable here; items are singletons
            report = dataset_ks(ds_from(rows), B15)
            scores.append(np.mean(list(report.per_user_dks.values())))
        assert scores[0] > scores[1] > scores[2] > scores[3]

    def test_csv_dump(self, tmp_path):
        rows = [("a", "x", 1.0), ("a", "y", 3.0), ("b", "x", 5.0)]
        ds = ds_from(rows)
        report = dataset_ks(ds, B15)
        path = tmp_path / "dks.csv"
        dump_difficulty_csv(report, ds, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "entity_type,entity_id,n,dks"
        assert len(lines) == 1 + 2 + 2  # 2 users + 2 items
        assert any(line.startswith("user,a,2,") for line in lines)
