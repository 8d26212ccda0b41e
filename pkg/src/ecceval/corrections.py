"""Post-training de-biasing corrections.

Each correction is a pure function mapping (biased prediction, user mean,
item mean) to a corrected prediction, fitted on a carved-out slice of the
train split. Four kinds are supported: a plain linear regression, two linear
regressions fitted on a resampled (uniformized) correction set with hard
clipping or a sigmoid output activation, and a random forest.

The resampling step discretizes the two entity means into an equal-width
bin grid and undersamples over-represented grid cells down to the median
non-empty cell count, so the fit stops being dominated by the dense center
of the mean-value distribution.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ValueBounds, BoundsSource, split_train_test
from .entity_stats import EntityStats
from .errors import DataError, TrainingError
from .forest import RegressionForest, fit_forest, pack_forest, unpack_forest
from .metrics import PredictionSet

CORRECTION_KINDS = ("linear", "linear_mlrus_clip", "linear_mlrus_sigmoid", "random_forest")
CORRECTION_FILE_VERSION = 1
_FEATURE_NAMES = ("predicted", "user_mean", "item_mean")
_LOGIT_EPS = 1e-3


@dataclass(frozen=True, eq=False)
class CorrectionSet:
    """Fitting rows: biased prediction, entity means, and the true target."""

    biased: np.ndarray
    user_mean: np.ndarray
    item_mean: np.ndarray
    target: np.ndarray
    bounds: ValueBounds

    def __post_init__(self):
        arrays = (self.biased, self.user_mean, self.item_mean, self.target)
        n = len(self.biased)
        if n == 0:
            raise DataError("correction set is empty")
        if any(len(a) != n for a in arrays):
            raise ValueError("correction-set columns must align")
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise DataError("non-finite field in correction set")

    def __len__(self) -> int:
        return len(self.biased)

    def features(self) -> np.ndarray:
        return np.column_stack([self.biased, self.user_mean, self.item_mean])


@dataclass(frozen=True, eq=False)
class Correction:
    """A fitted corrector. `coefficients` holds the 4 affine weights for the
    linear kinds; `forest` holds the trees for the random-forest kind."""

    kind: str
    bounds: ValueBounds
    coefficients: np.ndarray | None = None
    forest: RegressionForest | None = None

    def __post_init__(self):
        if self.kind not in CORRECTION_KINDS:
            raise ValueError(f"unknown correction kind {self.kind!r}")
        if self.kind == "random_forest":
            if self.forest is None:
                raise ValueError("random_forest correction needs trees")
        elif self.coefficients is None or len(self.coefficients) != 4:
            raise ValueError(f"{self.kind} correction needs 4 coefficients")

    def apply_values(
        self, biased: np.ndarray, user_mean: np.ndarray, item_mean: np.ndarray
    ) -> np.ndarray:
        X = np.column_stack([biased, user_mean, item_mean])
        b = self.bounds
        if self.kind == "random_forest":
            raw = self.forest.predict(X)
        else:
            affine = self.coefficients[0] + X @ self.coefficients[1:]
            if self.kind == "linear_mlrus_sigmoid":
                return b.min_value + b.span / (1.0 + np.exp(-affine))
            raw = affine
        return b.clamp(raw)


def carve_correction_set(
    train: Dataset, fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint split of train into (fit-train, correction)."""
    return split_train_test(train, fraction, seed)


def build_correction_set(p: PredictionSet, stats: EntityStats) -> CorrectionSet:
    """Join a model's predictions on the correction slice with entity means."""
    g = stats.global_mean
    user_mean = np.fromiter(
        (stats.user_means.get(u, g) for u in p.users), dtype=np.float64, count=len(p)
    )
    item_mean = np.fromiter(
        (stats.item_means.get(i, g) for i in p.items), dtype=np.float64, count=len(p)
    )
    return CorrectionSet(
        biased=p.predicted.copy(),
        user_mean=user_mean,
        item_mean=item_mean,
        target=p.observed.copy(),
        bounds=stats.bounds,
    )


def _cell_codes(cs: CorrectionSet, n_bins: int) -> np.ndarray:
    b = cs.bounds
    width = b.span / n_bins
    ub = np.minimum(((cs.user_mean - b.min_value) / width).astype(np.int64), n_bins - 1)
    ib = np.minimum(((cs.item_mean - b.min_value) / width).astype(np.int64), n_bins - 1)
    return ub * n_bins + ib


def mlrus_resample(cs: CorrectionSet, n_bins: int, seed: int) -> CorrectionSet:
    """Undersample over-represented (user-mean bin, item-mean bin) cells.

    Cells above the median non-empty cell count are randomly reduced to that
    quota; cells at or below it are untouched. Row order is preserved.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    codes = _cell_codes(cs, n_bins)
    cells, counts = np.unique(codes, return_counts=True)
    quota = int(math.floor(np.median(counts)))
    rng = np.random.default_rng(seed)
    keep = np.ones(len(cs), dtype=bool)
    for cell, count in zip(cells, counts):
        if count <= quota:
            continue
        rows = np.flatnonzero(codes == cell)
        kept = rng.choice(rows, size=quota, replace=False)
        keep[rows] = False
        keep[kept] = True
    idx = np.flatnonzero(keep)
    return CorrectionSet(
        biased=cs.biased[idx],
        user_mean=cs.user_mean[idx],
        item_mean=cs.item_mean[idx],
        target=cs.target[idx],
        bounds=cs.bounds,
    )


def _design_matrix(cs: CorrectionSet) -> np.ndarray:
    X = cs.features()
    for col, name in enumerate(_FEATURE_NAMES):
        if np.ptp(X[:, col]) == 0.0:
            raise TrainingError(f"degenerate design: feature {name!r} is constant")
    return np.column_stack([np.ones(len(cs)), X])


def _ols(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    coefs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise TrainingError(
            f"degenerate design: rank {rank} < {design.shape[1]} (collinear features)"
        )
    return coefs


def fit_linear_correction(
    cs: CorrectionSet,
    variant: str,
    bounds: ValueBounds,
    n_bins: int = 10,
    seed: int = 0,
) -> Correction:
    """Ordinary least squares of the target on (1, prediction, user mean,
    item mean).

    plain          fit on the raw correction set; output clamped at apply time
    mlrus_clip     resample first, fit on raw targets, hard-clip the output
    mlrus_sigmoid  resample first, fit on logit-transformed targets (scaled
                   to (0,1), extremes clipped at 1e-3), squash with a
                   logistic at apply time: output strictly inside the bounds
    """
    variants = {"plain": "linear", "mlrus_clip": "linear_mlrus_clip",
                "mlrus_sigmoid": "linear_mlrus_sigmoid"}
    if variant not in variants:
        raise ValueError(f"unknown variant {variant!r}")
    if variant != "plain":
        cs = mlrus_resample(cs, n_bins, seed)
    design = _design_matrix(cs)
    if variant == "mlrus_sigmoid":
        scaled = (cs.target - bounds.min_value) / bounds.span
        scaled = np.clip(scaled, _LOGIT_EPS, 1.0 - _LOGIT_EPS)
        target = np.log(scaled / (1.0 - scaled))
    else:
        target = cs.target
    coefs = _ols(design, target)
    return Correction(kind=variants[variant], bounds=bounds, coefficients=coefs)


def fit_forest_correction(
    cs: CorrectionSet,
    n_trees: int = 100,
    max_depth: int = 10,
    min_leaf: int = 1,
    seed: int = 0,
) -> Correction:
    """Random-forest regression of the target on the three features.

    Bootstrap trees with squared-error splits; each node samples
    ceil(sqrt(3)) = 2 of the 3 features as split candidates.
    """
    if n_trees < 1 or max_depth < 1 or min_leaf < 1:
        raise ValueError("n_trees, max_depth and min_leaf must be positive")
    forest = fit_forest(
        cs.features(), cs.target,
        n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf,
        max_features=2, seed=seed,
    )
    return Correction(kind="random_forest", bounds=cs.bounds, forest=forest)


def apply_correction(
    c: Correction, p: PredictionSet, stats: EntityStats
) -> PredictionSet:
    """Remap every prediction through the corrector; output stays in bounds."""
    g = stats.global_mean
    user_mean = np.fromiter(
        (stats.user_means.get(u, g) for u in p.users), dtype=np.float64, count=len(p)
    )
    item_mean = np.fromiter(
        (stats.item_means.get(i, g) for i in p.items), dtype=np.float64, count=len(p)
    )
    corrected = c.apply_values(p.predicted, user_mean, item_mean)
    return PredictionSet(
        users=p.users,
        items=p.items,
        observed=p.observed,
        predicted=corrected,
        model_name=f"{p.model_name}+{c.kind}",
        bounds=p.bounds,
    )


def save_correction(c: Correction, path: str | os.PathLike) -> None:
    header = {
        "version": CORRECTION_FILE_VERSION,
        "kind": c.kind,
        "bounds": [c.bounds.min_value, c.bounds.max_value, c.bounds.source.value],
    }
    payload = {"header": json.dumps(header)}
    if c.kind == "random_forest":
        payload.update(pack_forest(c.forest))
    else:
        payload["coefficients"] = c.coefficients
    np.savez(path, **payload)


def load_correction(path: str | os.PathLike) -> Correction:
    with np.load(path, allow_pickle=False) as blob:
        header = json.loads(str(blob["header"]))
        if header.get("version") != CORRECTION_FILE_VERSION:
            raise DataError(
                f"{path}: unsupported correction version {header.get('version')!r}"
            )
        lo, hi, source = header["bounds"]
        bounds = ValueBounds(float(lo), float(hi), BoundsSource(source))
        kind = header["kind"]
        if kind == "random_forest":
            return Correction(kind=kind, bounds=bounds, forest=unpack_forest(blob))
        return Correction(kind=kind, bounds=bounds, coefficients=blob["coefficients"])
