"""Biased matrix factorization trained with mini-batch SGD.

Scoring formula: r_hat = global_bias + b_u + b_i + p_u . q_i. The objective
is mean squared error plus an L2 penalty on embeddings and biases. Training
holds out a seeded slice of the train split and stops early when its RMSE
stops improving; the best-validation parameters are restored. Single
threaded and bit-deterministic for a fixed (data, hyperparams) pair.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict, replace

import numpy as np

from .data import Dataset, ValueBounds, BoundsSource
from .errors import DataError, TrainingError
from .metrics import PredictionSet

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MFHyperparams:
    embedding_dim: int = 64
    learning_rate: float = 0.001
    l2_weight: float = 0.00001
    early_stop_patience: int = 10
    early_stop_delta: float = 0.0001
    max_epochs: int = 200
    batch_size: int = 1024
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")
        # learning_rate 0 is allowed: a zero step leaves parameters at their
        # initialization, which the tests rely on.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.l2_weight < 0:
            raise ValueError("l2_weight must be >= 0")
        for name in ("early_stop_patience", "max_epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.early_stop_delta <= 0:
            raise ValueError("early_stop_delta must be positive")
        if not 0.0 < self.validation_fraction < 0.5:
            raise ValueError("validation_fraction must be in (0, 0.5)")


def hyperparams_from_file(path: str | os.PathLike) -> MFHyperparams:
    """Read `key = value` lines ('#' comments allowed) into hyperparameters."""
    fields = {
        "embedding_dim": int,
        "learning_rate": float,
        "l2_weight": float,
        "early_stop_patience": int,
        "early_stop_delta": float,
        "max_epochs": int,
        "batch_size": int,
        "validation_fraction": float,
        "seed": int,
    }
    kwargs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
            kwargs[key] = fields[key](raw)
    return MFHyperparams(**kwargs)


@dataclass(frozen=True, eq=False)
class MFModel:
    user_embeddings: np.ndarray  # (n_users, d)
    item_embeddings: np.ndarray  # (n_items, d)
    user_bias: np.ndarray
    item_bias: np.ndarray
    global_bias: float
    user_index: dict[str, int]
    item_index: dict[str, int]
    bounds: ValueBounds
    hyperparams: MFHyperparams

    def __post_init__(self):
        for arr in (self.user_embeddings, self.item_embeddings,
                    self.user_bias, self.item_bias):
            if not np.all(np.isfinite(arr)):
                raise TrainingError("model holds non-finite parameters")

    def score(self, user_codes: np.ndarray, item_codes: np.ndarray) -> np.ndarray:
        """Raw (unclamped) scores for dense index pairs."""
        return (
            self.global_bias
            + self.user_bias[user_codes]
            + self.item_bias[item_codes]
            + np.sum(self.user_embeddings[user_codes] * self.item_embeddings[item_codes], axis=1)
        )


def mf_loss_and_grad(
    user_emb: np.ndarray,
    item_emb: np.ndarray,
    user_bias: np.ndarray,
    item_bias: np.ndarray,
    global_bias: float,
    user_codes: np.ndarray,
    item_codes: np.ndarray,
    values: np.ndarray,
    l2_weight: float,
):
    """Full-batch loss and analytic gradients of MSE + L2.

    loss = mean((score - r)^2) + l2 * (|P|^2 + |Q|^2 + |b_u|^2 + |b_i|^2).
    The L2 term counts every parameter once (the global bias is exempt).
    Returns (loss, dP, dQ, db_u, db_i).
    """
    n = len(values)
    pred = (
        global_bias
        + user_bias[user_codes]
        + item_bias[item_codes]
        + np.sum(user_emb[user_codes] * item_emb[item_codes], axis=1)
    )
    resid = pred - values
    loss = float(np.mean(resid**2)) + l2_weight * float(
        np.sum(user_emb**2) + np.sum(item_emb**2)
        + np.sum(user_bias**2) + np.sum(item_bias**2)
    )
    coeff = 2.0 * resid / n
    dP = 2.0 * l2_weight * user_emb
    dQ = 2.0 * l2_weight * item_emb
    dbu = 2.0 * l2_weight * user_bias
    dbi = 2.0 * l2_weight * item_bias
    np.add.at(dP, user_codes, coeff[:, None] * item_emb[item_codes])
    np.add.at(dQ, item_codes, coeff[:, None] * user_emb[user_codes])
    np.add.at(dbu, user_codes, coeff)
    np.add.at(dbi, item_codes, coeff)
    return loss, dP, dQ, dbu, dbi


def _rmse_of(pred: np.ndarray, values: np.ndarray) -> float:
    return float(np.sqrt(np.mean((pred - values) ** 2)))


def train_mf(train: Dataset, hp: MFHyperparams, bounds: ValueBounds | None = None) -> MFModel:
    """Fit the factorization on a train split.

    Embeddings start i.i.d. normal with stddev 0.1/sqrt(d) and biases at
    zero, so early predictions sit near the global mean. Each SGD batch
    applies the data gradient per record occurrence and one weight-decay
    step per touched parameter row.
    """
    if len(train) < 2:
        raise DataError("need at least 2 interactions to train")
    if bounds is None:
        lo, hi = (train.declared_bounds
                  if train.declared_bounds is not None
                  else (float(train.values.min()), float(train.values.max())))
        if lo == hi:
            raise DataError("constant train values; provide explicit bounds")
        source = (BoundsSource.DECLARED if train.declared_bounds is not None
                  else BoundsSource.INFERRED)
        bounds = ValueBounds(lo, hi, source)

    rng = np.random.default_rng(hp.seed)
    d = hp.embedding_dim
    n_users = train.n_users
    n_items = train.n_items
    scale = 0.1 / math.sqrt(d)
    P = rng.normal(0.0, scale, size=(n_users, d))
    Q = rng.normal(0.0, scale, size=(n_items, d))
    bu = np.zeros(n_users)
    bi = np.zeros(n_items)
    mu = float(train.values.mean())

    user_codes = train.user_codes()
    item_codes = train.item_codes()
    values = train.values

    n = len(train)
    n_val = max(1, int(math.floor(hp.validation_fraction * n + 0.5)))
    if n_val >= n:
        raise DataError("validation split leaves no training rows")
    perm = rng.permutation(n)
    val_idx = perm[:n_val]
    fit_idx = perm[n_val:]
    vu, vi, vv = user_codes[val_idx], item_codes[val_idx], values[val_idx]
    fu, fi, fv = user_codes[fit_idx], item_codes[fit_idx], values[fit_idx]

    lr = hp.learning_rate
    l2 = hp.l2_weight
    best = None
    best_val = math.inf
    stale_epochs = 0

    def val_rmse():
        pred = mu + bu[vu] + bi[vi] + np.sum(P[vu] * Q[vi], axis=1)
        return _rmse_of(pred, vv)

    for epoch in range(hp.max_epochs):
        order = rng.permutation(len(fv))
        for start in range(0, len(fv), hp.batch_size):
            batch = order[start:start + hp.batch_size]
            ub, ib, rb = fu[batch], fi[batch], fv[batch]
            pred = mu + bu[ub] + bi[ib] + np.sum(P[ub] * Q[ib], axis=1)
            resid = pred - rb
            batch_loss = float(np.mean(resid**2))
            if not math.isfinite(batch_loss):
                raise TrainingError(
                    f"training diverged (non-finite loss) at epoch {epoch}"
                )
            coeff = 2.0 * resid / len(rb)
            gP_rows = coeff[:, None] * Q[ib]
            gQ_rows = coeff[:, None] * P[ub]
            np.add.at(P, ub, -lr * gP_rows)
            np.add.at(Q, ib, -lr * gQ_rows)
            np.add.at(bu, ub, -lr * coeff)
            np.add.at(bi, ib, -lr * coeff)
            if l2 > 0:
                for arr, touched in ((P, ub), (Q, ib), (bu, ub), (bi, ib)):
                    rows = np.unique(touched)
                    arr[rows] -= lr * 2.0 * l2 * arr[rows]

        current = val_rmse()
        if not math.isfinite(current):
            raise TrainingError(f"training diverged (non-finite loss) at epoch {epoch}")
        if current < best_val - hp.early_stop_delta:
            best_val = current
            best = (P.copy(), Q.copy(), bu.copy(), bi.copy())
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= hp.early_stop_patience:
                break

    if best is not None:
        P, Q, bu, bi = best

    return MFModel(
        user_embeddings=P,
        item_embeddings=Q,
        user_bias=bu,
        item_bias=bi,
        global_bias=mu,
        user_index=dict(train.user_index),
        item_index=dict(train.item_index),
        bounds=bounds,
        hyperparams=hp,
    )


def predict_mf(model: MFModel, dyads) -> PredictionSet:
    """Score dyads and clamp to bounds.

    Cold-start users/items contribute zero bias and a zero embedding, so a
    fully cold dyad predicts the global bias.
    """
    users = tuple(d[0] for d in dyads)
    items = tuple(d[1] for d in dyads)
    observed = np.array([d[2] for d in dyads], dtype=np.float64)
    u_codes = np.array([model.user_index.get(u, -1) for u in users], dtype=np.int64)
    i_codes = np.array([model.item_index.get(i, -1) for i in items], dtype=np.int64)
    known_u = u_codes >= 0
    known_i = i_codes >= 0

    pred = np.full(len(users), model.global_bias)
    pred[known_u] += model.user_bias[u_codes[known_u]]
    pred[known_i] += model.item_bias[i_codes[known_i]]
    both = known_u & known_i
    pred[both] += np.sum(
        model.user_embeddings[u_codes[both]] * model.item_embeddings[i_codes[both]],
        axis=1,
    )
    return PredictionSet(
        users=users,
        items=items,
        observed=observed,
        predicted=model.bounds.clamp(pred),
        model_name="mf",
        bounds=model.bounds,
    )


def save_model(model: MFModel, path: str | os.PathLike) -> None:
    """Single-file binary checkpoint with a versioned header and entity maps."""
    header = {
        "version": CHECKPOINT_VERSION,
        "embedding_dim": model.hyperparams.embedding_dim,
        "n_users": len(model.user_index),
        "n_items": len(model.item_index),
        "seed": model.hyperparams.seed,
        "bounds": [model.bounds.min_value, model.bounds.max_value,
                   model.bounds.source.value],
        "hyperparams": asdict(model.hyperparams),
    }
    user_ids = sorted(model.user_index, key=model.user_index.__getitem__)
    item_ids = sorted(model.item_index, key=model.item_index.__getitem__)
    np.savez(
        path,
        header=json.dumps(header),
        user_ids=np.array(user_ids, dtype=object),
        item_ids=np.array(item_ids, dtype=object),
        user_embeddings=model.user_embeddings,
        item_embeddings=model.item_embeddings,
        user_bias=model.user_bias,
        item_bias=model.item_bias,
        global_bias=np.array([model.global_bias]),
    )


def load_model(path: str | os.PathLike) -> MFModel:
    with np.load(path, allow_pickle=True) as blob:
        header = json.loads(str(blob["header"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise DataError(
                f"{path}: unsupported checkpoint version {header.get('version')!r}"
            )
        lo, hi, source = header["bounds"]
        hp = MFHyperparams(**header["hyperparams"])
        user_ids = [str(u) for u in blob["user_ids"]]
        item_ids = [str(i) for i in blob["item_ids"]]
        return MFModel(
            user_embeddings=blob["user_embeddings"],
            item_embeddings=blob["item_embeddings"],
            user_bias=blob["user_bias"],
            item_bias=blob["item_bias"],
            global_bias=float(blob["global_bias"][0]),
            user_index={u: k for k, u in enumerate(user_ids)},
            item_index={i: k for k, i in enumerate(item_ids)},
            bounds=ValueBounds(float(lo), float(hi), BoundsSource(source)),
            hyperparams=hp,
        )


def with_seed(hp: MFHyperparams, seed: int) -> MFHyperparams:
    return replace(hp, seed=seed)
