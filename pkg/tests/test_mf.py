import numpy as np
import pytest

from ecceval.data import Dataset, ValueBounds
from ecceval.errors import DataError, TrainingError
from ecceval.mf import (
    MFHyperparams,
    hyperparams_from_file,
    load_model,
    mf_loss_and_grad,
    predict_mf,
    save_model,
    train_mf,
)

B15 = ValueBounds(1.0, 5.0)


def ds_from(rows, bounds=(1.0, 5.0)):
    return Dataset(
        name="t",
        users=tuple(r[0] for r in rows),
        items=tuple(r[1] for r in rows),
        values=np.array([r[2] for r in rows], dtype=float),
        declared_bounds=bounds,
    )


def small_dataset(rng, n_users=8, n_items=6, n=60):
    rows = []
    for _ in range(n):
        rows.append(
            (f"u{rng.integers(n_users)}", f"i{rng.integers(n_items)}",
             float(rng.uniform(1, 5)))
        )
    return ds_from(rows)


class TestHyperparams:
    def test_validation(self):
        with pytest.raises(ValueError):
            MFHyperparams(embedding_dim=0)
        with pytest.raises(ValueError):
            MFHyperparams(learning_rate=-0.1)
        with pytest.raises(ValueError):
            MFHyperparams(validation_fraction=0.5)
        MFHyperparams(learning_rate=0.0)  # zero step is legal

    def test_from_file(self, tmp_path):
        path = tmp_path / "hp.cfg"
        path.write_text(
            "embedding_dim = 32\nlearning_rate = 0.02  # step\nseed = 5\n"
        )
        hp = hyperparams_from_file(path)
        assert hp.embedding_dim == 32
        assert hp.learning_rate == 0.02
        assert hp.seed == 5
        assert hp.l2_weight == MFHyperparams().l2_weight

    def test_from_file_unknown_key(self, tmp_path):
        path = tmp_path / "hp.cfg"
        path.write_text("embeddin_dim = 32\n")
        with pytest.raises(ValueError, match="unknown key"):
            hyperparams_from_file(path)


class TestGradients:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(0)
        for trial in range(5):
            n_users, n_items, d = 5, 4, int(rng.integers(1, 5))
            n = int(rng.integers(6, 21))
            P = rng.normal(0, 0.5, (n_users, d))
            Q = rng.normal(0, 0.5, (n_items, d))
            bu = rng.normal(0, 0.3, n_users)
            bi = rng.normal(0, 0.3, n_items)
            mu = 3.0
            uc = rng.integers(0, n_users, n)
            ic = rng.integers(0, n_items, n)
            vals = rng.uniform(1, 5, n)
            l2 = 0.01

            loss, dP, dQ, dbu, dbi = mf_loss_and_grad(P, Q, bu, bi, mu, uc, ic, vals, l2)

            eps = 1e-6
            def fd(arr, analytic):
                flat = arr.ravel()
                for k in rng.choice(flat.size, size=min(10, flat.size), replace=False):
                    orig = flat[k]
                    flat[k] = orig + eps
                    lp = mf_loss_and_grad(P, Q, bu, bi, mu, uc, ic, vals, l2)[0]
                    flat[k] = orig - eps
                    lm = mf_loss_and_grad(P, Q, bu, bi, mu, uc, ic, vals, l2)[0]
                    flat[k] = orig
                    num = (lp - lm) / (2 * eps)
                    ana = analytic.ravel()[k]
                    denom = max(abs(num), abs(ana), 1e-8)
                    assert abs(num - ana) / denom <= 1e-4

            fd(P, dP)
            fd(Q, dQ)
            fd(bu, dbu)
            fd(bi, dbi)


class TestTraining:
    def test_rank_one_synthetic_oracle(self):
        # noiseless multiplicative data: r_ui = a_u * b_i, representable
        # exactly by the model, so training error must approach zero
        rng = np.random.default_rng(1)
        a = rng.uniform(1.2, 2.0, 12)
        b = rng.uniform(1.0, 2.2, 10)
        rows = []
        for u in range(12):
            for i in range(10):
                rows.append((f"u{u}", f"i{i}", float(a[u] * b[i])))
        train = ds_from(rows, bounds=(1.0, 5.0))
        hp = MFHyperparams(
            embedding_dim=2, learning_rate=0.1, l2_weight=0.0,
            max_epochs=2000, batch_size=32, early_stop_patience=2000,
            validation_fraction=0.1, seed=0,
        )
        model = train_mf(train, hp)
        p = predict_mf(model, rows)
        train_rmse = float(np.sqrt(np.mean((p.predicted - p.observed) ** 2)))
        assert train_rmse < 0.05

    def test_zero_learning_rate_keeps_initialization(self):
        rng = np.random.default_rng(2)
        train = small_dataset(rng)
        hp0 = MFHyperparams(learning_rate=0.0, max_epochs=5, seed=7, embedding_dim=4)
        model = train_mf(train, hp0)
        ref = np.random.default_rng(7)
        scale = 0.1 / np.sqrt(4)
        P0 = ref.normal(0.0, scale, size=(train.n_users, 4))
        Q0 = ref.normal(0.0, scale, size=(train.n_items, 4))
        assert np.array_equal(model.user_embeddings, P0)
        assert np.array_equal(model.item_embeddings, Q0)
        assert np.all(model.user_bias == 0.0)

    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(3)
        train = small_dataset(rng, n=120)
        hp = MFHyperparams(embedding_dim=8, learning_rate=0.02, max_epochs=20, seed=11)
        m1 = train_mf(train, hp)
        m2 = train_mf(train, hp)
        assert np.array_equal(m1.user_embeddings, m2.user_embeddings)
        assert np.array_equal(m1.item_embeddings, m2.item_embeddings)
        assert np.array_equal(m1.user_bias, m2.user_bias)
        assert np.array_equal(m1.item_bias, m2.item_bias)

    def test_regularization_monotone_on_train_error(self):
        rng = np.random.default_rng(4)
        train = small_dataset(rng, n=150)
        rows = list(zip(train.users, train.items, train.values))
        errors = []
        for l2 in (0.0, 0.01, 0.1):
            hp = MFHyperparams(
                embedding_dim=6, learning_rate=0.05, l2_weight=l2,
                max_epochs=120, early_stop_patience=120, batch_size=32, seed=5,
            )
            model = train_mf(train, hp)
            p = predict_mf(model, rows)
            errors.append(float(np.sqrt(np.mean((p.predicted - p.observed) ** 2))))
        assert errors[0] <= errors[1] <= errors[2]

    def test_divergence_reports_epoch(self):
        rng = np.random.default_rng(5)
        train = small_dataset(rng, n=200)
        hp = MFHyperparams(embedding_dim=8, learning_rate=80.0, max_epochs=50, seed=0)
        with pytest.raises(TrainingError, match="epoch"):
            train_mf(train, hp)

    def test_empty_bounds_inference(self):
        rows = [("a", "x", 2.0), ("a", "y", 4.0), ("b", "x", 3.0)]
        train = ds_from(rows, bounds=None)
        hp = MFHyperparams(embedding_dim=2, max_epochs=2, seed=0)
        model = train_mf(train, hp)
        assert model.bounds.min_value == 2.0 and model.bounds.max_value == 4.0


class TestPredict:
    def make_model(self):
        rng = np.random.default_rng(6)
        train = small_dataset(rng, n=100)
        hp = MFHyperparams(embedding_dim=4, learning_rate=0.02, max_epochs=10, seed=1)
        return train_mf(train, hp)

    def test_global_bias_only(self):
        model = self.make_model()
        zeroed = type(model)(
            user_embeddings=np.zeros_like(model.user_embeddings),
            item_embeddings=np.zeros_like(model.item_embeddings),
            user_bias=np.zeros_like(model.user_bias),
            item_bias=np.zeros_like(model.item_bias),
            global_bias=3.0,
            user_index=model.user_index,
            item_index=model.item_index,
            bounds=model.bounds,
            hyperparams=model.hyperparams,
        )
        p = predict_mf(zeroed, [("u0", "i0", 4.0), ("u1", "i2", 2.0)])
        assert np.allclose(p.predicted, 3.0)

    def test_clamped_to_bounds(self):
        model = self.make_model()
        boosted = type(model)(
            user_embeddings=model.user_embeddings,
            item_embeddings=model.item_embeddings,
            user_bias=model.user_bias + 10.0,
            item_bias=model.item_bias,
            global_bias=model.global_bias,
            user_index=model.user_index,
            item_index=model.item_index,
            bounds=model.bounds,
            hyperparams=model.hyperparams,
        )
        p = predict_mf(boosted, [("u0", "i0", 4.0)])
        assert p.predicted[0] == 5.0

    def test_cold_start_uses_known_side(self):
        model = self.make_model()
        p = predict_mf(model, [("stranger", "i0", 3.0)])
        i0 = model.item_index["i0"]
        expected = np.clip(model.global_bias + model.item_bias[i0], 1.0, 5.0)
        assert p.predicted[0] == pytest.approx(expected)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        train = small_dataset(rng, n=80)
        hp = MFHyperparams(embedding_dim=3, learning_rate=0.02, max_epochs=5, seed=2)
        model = train_mf(train, hp)
        path = tmp_path / "model.npz"
        save_model(model, path)
        again = load_model(path)
        assert np.array_equal(again.user_embeddings, model.user_embeddings)
        assert again.user_index == model.user_index
        assert again.bounds == model.bounds
        assert again.hyperparams == model.hyperparams
        dyads = [("u0", "i0", 3.0), ("nobody", "i1", 2.0)]
        assert np.array_equal(
            predict_mf(again, dyads).predicted, predict_mf(model, dyads).predicted
        )

    def test_version_guard(self, tmp_path):
        path = tmp_path / "bad.npz"
        np.savez(path, header='{"version": 99}')
        with pytest.raises(DataError, match="version"):
            load_model(path)
