"""Dataset susceptibility to eccentricity bias via entity-wise uniformity.

For each entity, the one-sample Kolmogorov-Smirnov statistic measures how far
its empirical distribution of observed values deviates from a continuous
uniform over the task's value range. Entities whose values pile up around
their own mean score high; globally-optimizing models trained on such data
are rewarded for anchoring predictions near entity averages. The dataset
score is the unweighted mean over all users and items of the train split.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ValueBounds
from .errors import DataError


@dataclass(frozen=True)
class DifficultyReport:
    dks_dataset: float
    per_user_dks: dict[str, float]
    per_item_dks: dict[str, float]
    bounds: ValueBounds


def entity_ks(values, bounds: ValueBounds) -> float:
    """Exact one-sample KS statistic against U(min_value, max_value).

    sup_x |F_emp(x) - F_unif(x)|, evaluated at both sides of every step of
    the empirical CDF. No asymptotic approximation: entity samples are small.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if n == 0:
        raise DataError("entity_ks needs at least one value")
    if x[0] < bounds.min_value or x[-1] > bounds.max_value:
        raise DataError("values outside bounds")
    cdf = (x - bounds.min_value) / bounds.span
    steps = np.arange(1, n + 1) / n
    d_plus = np.max(steps - cdf)          # just after each step
    d_minus = np.max(cdf - (steps - 1 / n))  # just before each step
    return float(max(d_plus, d_minus))


def dataset_ks(train: Dataset, bounds: ValueBounds) -> DifficultyReport:
    """Entity-wise KS statistics for every train user and item.

    The dataset statistic is the plain average over the |users| + |items|
    per-entity statistics: sparse entities (even single-observation ones)
    count exactly once each.
    """
    values = train.values
    user_stats = _per_group_ks(train.user_codes(), values, train.user_index, bounds)
    item_stats = _per_group_ks(train.item_codes(), values, train.item_index, bounds)
    total = sum(user_stats.values()) + sum(item_stats.values())
    count = len(user_stats) + len(item_stats)
    return DifficultyReport(
        dks_dataset=total / count,
        per_user_dks=user_stats,
        per_item_dks=item_stats,
        bounds=bounds,
    )


def _per_group_ks(codes, values, index, bounds) -> dict[str, float]:
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    sorted_values = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_codes)) + 1
    chunks = np.split(sorted_values, boundaries)
    ids = list(index)
    present = sorted_codes[np.concatenate(([0], boundaries))] if len(codes) else []
    return {
        ids[code]: entity_ks(chunk, bounds) for code, chunk in zip(present, chunks)
    }


def dump_difficulty_csv(
    report: DifficultyReport,
    train: Dataset,
    path: str | os.PathLike,
) -> None:
    """Write `entity_type,entity_id,n,dks` rows."""
    user_counts = np.bincount(train.user_codes(), minlength=train.n_users)
    item_counts = np.bincount(train.item_codes(), minlength=train.n_items)
    user_ids = list(train.user_index)
    item_ids = list(train.item_index)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity_type", "entity_id", "n", "dks"])
        for uid in user_ids:
            writer.writerow(
                ["user", uid, int(user_counts[train.user_index[uid]]),
                 repr(report.per_user_dks[uid])]
            )
        for iid in item_ids:
            writer.writerow(
                ["item", iid, int(item_counts[train.item_index[iid]]),
                 repr(report.per_item_dks[iid])]
            )
