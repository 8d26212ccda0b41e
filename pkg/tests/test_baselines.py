import numpy as np
import pytest

from ecceval.baselines import predict_dyad_average, predict_random
from ecceval.data import Dataset, ValueBounds
from ecceval.entity_stats import compute_entity_means, eccentricity
from ecceval.metrics import eauc

B15 = ValueBounds(1.0, 5.0)


def dyads_of(n, rng):
    return [
        (f"u{rng.integers(10)}", f"i{rng.integers(10)}", float(rng.uniform(1, 5)))
        for _ in range(n)
    ]


def train_ds(rng, n=300):
    rows = dyads_of(n, rng)
    return Dataset(
        name="t",
        users=tuple(r[0] for r in rows),
        items=tuple(r[1] for r in rows),
        values=np.array([r[2] for r in rows]),
    )


class TestRandom:
    def test_within_bounds(self):
        rng = np.random.default_rng(0)
        p = predict_random(dyads_of(500, rng), B15, seed=1)
        assert p.predicted.min() >= 1.0 and p.predicted.max() <= 5.0

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(0)
        dyads = dyads_of(100, rng)
        a = predict_random(dyads, B15, seed=9)
        b = predict_random(dyads, B15, seed=9)
        assert np.array_equal(a.predicted, b.predicted)
        c = predict_random(dyads, B15, seed=10)
        assert not np.array_equal(a.predicted, c.predicted)

    def test_collapsed_range(self):
        rng = np.random.default_rng(0)
        narrow = ValueBounds(3.0, 3.0 + 1e-9)
        p = predict_random(dyads_of(50, rng), narrow, seed=0)
        assert np.allclose(p.predicted, 3.0, atol=1e-8)


class TestDyadAverage:
    def test_error_equals_eccentricity(self):
        rng = np.random.default_rng(4)
        train = train_ds(rng)
        stats = compute_entity_means(train, B15)
        dyads = dyads_of(200, rng)
        p = predict_dyad_average(stats, dyads)
        for (u, i, r), err in zip(dyads, np.abs(p.predicted - p.observed)):
            assert err == pytest.approx(eccentricity(stats, u, i, r), abs=1e-12)

    def test_curve_is_identity_line(self):
        rng = np.random.default_rng(4)
        train = train_ds(rng)
        stats = compute_entity_means(train, B15)
        p = predict_dyad_average(stats, dyads_of(400, rng))
        _, curve = eauc(stats, p, B15)
        ecc = curve.points[:, 0]
        err = curve.points[:, 1]
        assert np.allclose(ecc, err, atol=1e-12)

    def test_cold_start_constant_global_mean(self):
        rng = np.random.default_rng(4)
        train = train_ds(rng)
        stats = compute_entity_means(train, B15)
        dyads = [("ghost1", "phantom1", 3.0), ("ghost2", "phantom2", 4.0)]
        p = predict_dyad_average(stats, dyads)
        assert np.allclose(p.predicted, stats.global_mean)
