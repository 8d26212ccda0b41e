"""Per-entity mean observed values, dyadic mean value (DMV), and eccentricity.

Means are always computed on the train split, never on test, so that the
derived quantities are leakage-free. Entities absent from train fall back to
the train global mean; the fallback count is surfaced by the vectorized
helpers so reports can show how often it fired.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ValueBounds
from .errors import DataError


@dataclass(frozen=True)
class EntityStats:
    """Train-side mean observed value per user and per item."""

    user_means: dict[str, float]
    item_means: dict[str, float]
    user_counts: dict[str, int]
    item_counts: dict[str, int]
    global_mean: float
    bounds: ValueBounds

    def user_mean(self, user: str) -> float:
        """Mean for `user`, falling back to the global mean if unseen in train."""
        return self.user_means.get(user, self.global_mean)

    def item_mean(self, item: str) -> float:
        return self.item_means.get(item, self.global_mean)


def compute_entity_means(train: Dataset, bounds: ValueBounds) -> EntityStats:
    """Average observed value per user and per item over the train split.

    Every occurrence counts: a re-observed (user, item) pair contributes each
    of its values to both entity means.
    """
    if len(train) == 0:
        raise DataError("cannot compute entity means of an empty dataset")
    values = train.values
    if values.min() < bounds.min_value or values.max() > bounds.max_value:
        raise DataError("train values outside the given bounds")

    user_codes = train.user_codes()
    item_codes = train.item_codes()
    user_means, user_counts = _group_means(user_codes, values, train.user_index)
    item_means, item_counts = _group_means(item_codes, values, train.item_index)
    return EntityStats(
        user_means=user_means,
        item_means=item_means,
        user_counts=user_counts,
        item_counts=item_counts,
        global_mean=float(values.mean()),
        bounds=bounds,
    )


def _group_means(codes, values, index):
    n_groups = len(index)
    sums = np.zeros(n_groups)
    counts = np.zeros(n_groups, dtype=np.int64)
    np.add.at(sums, codes, values)
    np.add.at(counts, codes, 1)
    means = sums / counts
    ids = list(index)  # insertion order == dense code order
    return (
        {ids[k]: float(means[k]) for k in range(n_groups)},
        {ids[k]: int(counts[k]) for k in range(n_groups)},
    )


def dmv(stats: EntityStats, user: str, item: str) -> float:
    """Dyadic mean value: midpoint of the two entity means.

    A missing side is replaced by the global train mean; with both sides
    missing this degenerates to the global mean itself.
    """
    return 0.5 * (stats.user_mean(user) + stats.item_mean(item))


def eccentricity(stats: EntityStats, user: str, item: str, value: float) -> float:
    """Absolute deviation of an observed value from the dyad's DMV."""
    if not math.isfinite(value):
        raise ValueError(f"value must be finite, got {value!r}")
    return abs(value - dmv(stats, user, item))


def dmv_array(stats: EntityStats, users, items) -> tuple[np.ndarray, int, int]:
    """Vectorized DMV over parallel id sequences.

    Returns (dmv values, cold-start user count, cold-start item count), the
    counts tallying interactions whose user/item needed the global-mean
    fallback.
    """
    g = stats.global_mean
    um = stats.user_means
    im = stats.item_means
    u_vals = np.fromiter((um.get(u, g) for u in users), dtype=np.float64, count=len(users))
    i_vals = np.fromiter((im.get(i, g) for i in items), dtype=np.float64, count=len(items))
    cold_u = sum(1 for u in users if u not in um)
    cold_i = sum(1 for i in items if i not in im)
    return 0.5 * (u_vals + i_vals), cold_u, cold_i


def dump_means_csv(stats: EntityStats, path: str | os.PathLike) -> None:
    """Write `entity_type,entity_id,mean,count` rows for inspection."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity_type", "entity_id", "mean", "count"])
        for uid, mean in stats.user_means.items():
            writer.writerow(["user", uid, repr(mean), stats.user_counts[uid]])
        for iid, mean in stats.item_means.items():
            writer.writerow(["item", iid, repr(mean), stats.item_counts[iid]])
