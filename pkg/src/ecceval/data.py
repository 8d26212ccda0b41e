"""Dyadic interaction datasets: loading, validation, splitting, value bounds.

A dataset is an ordered list of (user, item, value) interactions. Entity ids
are opaque strings; dense integer indices are assigned in first-appearance
order at construction and kept on the dataset for stable reporting.
Duplicate (user, item) pairs are legal and kept as distinct interactions.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


class BoundsSource(enum.Enum):
    DECLARED = "declared"
    INFERRED = "inferred"


@dataclass(frozen=True)
class ValueBounds:
    """Closed value range [min_value, max_value] for a task."""

    min_value: float
    max_value: float
    source: BoundsSource = BoundsSource.DECLARED

    def __post_init__(self):
        if not (math.isfinite(self.min_value) and math.isfinite(self.max_value)):
            raise ValueError("bounds must be finite")
        if not self.min_value < self.max_value:
            raise DataError(
                f"degenerate bounds: min {self.min_value} >= max {self.max_value}"
            )

    @property
    def span(self) -> float:
        return self.max_value - self.min_value

    def clamp(self, x):
        return np.clip(x, self.min_value, self.max_value)

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=float)
        return bool(np.all((arr >= self.min_value) & (arr <= self.max_value)))


@dataclass(frozen=True)
class Interaction:
    user: str
    item: str
    value: float

    def __post_init__(self):
        if not self.user or not self.item:
            raise ValueError("user and item ids must be non-empty")
        if not math.isfinite(self.value):
            raise ValueError(f"interaction value must be finite, got {self.value!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of interactions with optional declared value bounds.

    Immutable after construction; the value array is marked read-only so
    instances are safe to share across threads.
    """

    name: str
    users: tuple[str, ...]
    items: tuple[str, ...]
    values: np.ndarray
    declared_bounds: tuple[float, float] | None = None
    user_index: dict[str, int] = field(default_factory=dict)
    item_index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        object.__setattr__(self, "values", values)
        n = len(values)
        if n == 0:
            raise DataError(f"dataset {self.name!r} is empty")
        if len(self.users) != n or len(self.items) != n:
            raise ValueError("users, items and values must have equal length")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError(f"non-finite value at interaction {bad} of {self.name!r}")
        if any(not u for u in self.users) or any(not i for i in self.items):
            raise DataError(f"empty entity id in dataset {self.name!r}")
        if self.declared_bounds is not None:
            lo, hi = self.declared_bounds
            if not lo < hi:
                raise DataError(f"declared bounds ({lo}, {hi}) are degenerate")
            if values.min() < lo or values.max() > hi:
                raise DataError(
                    f"dataset {self.name!r} has values outside declared bounds ({lo}, {hi})"
                )
        if not self.user_index:
            object.__setattr__(self, "user_index", _dense_index(self.users))
        if not self.item_index:
            object.__setattr__(self, "item_index", _dense_index(self.items))
        values.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        for u, i, v in zip(self.users, self.items, self.values):
            yield Interaction(u, i, float(v))

    def __eq__(self, other) -> bool:
        # Identity of a dataset is its interaction content, not its label:
        # name and declared bounds are not stored in the CSV row schema.
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.users == other.users
            and self.items == other.items
            and np.array_equal(self.values, other.values)
        )

    @property
    def n_users(self) -> int:
        return len(self.user_index)

    @property
    def n_items(self) -> int:
        return len(self.item_index)

    def user_codes(self) -> np.ndarray:
        """Dense integer index per interaction, aligned with `values`."""
        return np.fromiter(
            (self.user_index[u] for u in self.users), dtype=np.int64, count=len(self)
        )

    def item_codes(self) -> np.ndarray:
        return np.fromiter(
            (self.item_index[i] for i in self.items), dtype=np.int64, count=len(self)
        )

    def subset(self, indices: np.ndarray, name: str) -> "Dataset":
        """New dataset from a selection of interaction positions (order kept)."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            name=name,
            users=tuple(self.users[k] for k in indices),
            items=tuple(self.items[k] for k in indices),
            values=self.values[indices],
            declared_bounds=self.declared_bounds,
        )


def _dense_index(ids) -> dict[str, int]:
    index: dict[str, int] = {}
    for x in ids:
        if x not in index:
            index[x] = len(index)
    return index


def load_interactions(
    path: str | os.PathLike,
    format: str = "csv",
    name: str | None = None,
    declared_bounds: tuple[float, float] | None = None,
) -> Dataset:
    """Load a dataset from disk.

    `csv` expects a `user_id,item_id,value` header; `movielens_dat` expects
    `user::item::rating::timestamp` rows (tab-separated variants of the same
    four columns are accepted too; the timestamp is discarded). Row order is
    preserved and duplicate (user, item) pairs are kept.
    """
    if format not in ("csv", "movielens_dat"):
        raise ValueError(f"unknown format {format!r}")
    if name is None:
        name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        if format == "csv":
            users, items, values = _parse_csv(fh, path)
        else:
            users, items, values = _parse_movielens(fh, path)
    if not values:
        raise DataError(f"{path}: no interactions found")
    return Dataset(
        name=name,
        users=tuple(users),
        items=tuple(items),
        values=np.array(values, dtype=np.float64),
        declared_bounds=declared_bounds,
    )


def _parse_csv(fh: io.TextIOBase, path) -> tuple[list[str], list[str], list[float]]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: file is empty") from None
    expected = ["user_id", "item_id", "value"]
    if [h.strip() for h in header] != expected:
        raise DataError(f"{path}: line 1: expected header {','.join(expected)!r}")
    users, items, values = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
        u, i, raw = (f.strip() for f in row)
        if not u or not i:
            raise DataError(f"{path}: line {lineno}: empty entity id")
        try:
            v = float(raw)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: bad value {raw!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}: line {lineno}: non-finite value {raw!r}")
        users.append(u)
        items.append(i)
        values.append(v)
    return users, items, values


def _parse_movielens(fh: io.TextIOBase, path) -> tuple[list[str], list[str], list[float]]:
    users, items, values = [], [], []
    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("::") if "::" in line else line.split("\t")
        if len(fields) != 4:
            raise DataError(
                f"{path}: line {lineno}: expected user::item::rating::timestamp"
            )
        u, i, raw = fields[0].strip(), fields[1].strip(), fields[2].strip()
        if not u or not i:
            raise DataError(f"{path}: line {lineno}: empty entity id")
        try:
            v = float(raw)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: bad rating {raw!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}: line {lineno}: non-finite rating {raw!r}")
        users.append(u)
        items.append(i)
        values.append(v)
    return users, items, values


def save_csv(dataset: Dataset, path: str | os.PathLike) -> None:
    """Write the standard `user_id,item_id,value` schema (UTF-8, '.' decimals)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "value"])
        for u, i, v in zip(dataset.users, dataset.items, dataset.values):
            writer.writerow([u, i, repr(float(v))])


def split_train_test(
    dataset: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Uniform-random disjoint partition into (train, test).

    |test| = round(test_fraction * |dataset|), half-up. Within each side the
    original interaction order is preserved; the same seed always yields the
    same partition.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n < 2:
        raise DataError("need at least 2 interactions to split")
    n_test = int(math.floor(test_fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    test_pos = np.sort(rng.permutation(n)[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_pos] = True
    train = dataset.subset(np.flatnonzero(~mask), f"{dataset.name}.train")
    test = dataset.subset(test_pos, f"{dataset.name}.test")
    return train, test


def write_split(train: Dataset, test: Dataset, out_dir: str | os.PathLike, name: str) -> tuple[str, str]:
    """Persist a split as `<name>.train.csv` / `<name>.test.csv` under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    train_path = os.path.join(os.fspath(out_dir), f"{name}.train.csv")
    test_path = os.path.join(os.fspath(out_dir), f"{name}.test.csv")
    save_csv(train, train_path)
    save_csv(test, test_path)
    return train_path, test_path


def rating_bounds(d_train: Dataset, d_test: Dataset) -> ValueBounds:
    """Value bounds for an evaluation run.

    A declaration on either split wins (both normally inherit it from the
    parent dataset); otherwise the min/max over the union of both splits is
    used and flagged as inferred. Inferred bounds change with subsampling, so
    declared task bounds are preferred wherever available.
    """
    declared = d_train.declared_bounds or d_test.declared_bounds
    if declared is not None:
        return ValueBounds(declared[0], declared[1], BoundsSource.DECLARED)
    lo = float(min(d_train.values.min(), d_test.values.min()))
    hi = float(max(d_train.values.max(), d_test.values.max()))
    if lo == hi:
        raise DataError(f"all values equal {lo}; bounds are degenerate")
    return ValueBounds(lo, hi, BoundsSource.INFERRED)
