"""Error metrics and eccentricity diagnostics for dyadic predictions.

The headline metric normalizes the trapezoidal area under the sorted
(eccentricity, absolute error) sequence of a test set by the squared value
range, yielding a score in [0, 1]: 0 for a perfect predictor, 0.5 for the
naive predictor that always answers the dyad's DMV (its curve is exactly
y = x when eccentricities span the range).

Records sharing the same eccentricity are collapsed to a single point whose
error is their mean before integrating. Zero-width trapezoids contribute no
area, but the order of tied records would change the two neighbouring
nonzero trapezoids; collapsing makes the score well-defined and independent
of input order.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .data import ValueBounds
from .entity_stats import EntityStats, dmv_array
from .errors import DataError

DEFAULT_CURVE_BINS = 20


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Test interactions joined with one model's predictions."""

    users: tuple[str, ...]
    items: tuple[str, ...]
    observed: np.ndarray
    predicted: np.ndarray
    model_name: str
    bounds: ValueBounds

    def __post_init__(self):
        observed = np.asarray(self.observed, dtype=np.float64)
        predicted = np.asarray(self.predicted, dtype=np.float64)
        object.__setattr__(self, "observed", observed)
        object.__setattr__(self, "predicted", predicted)
        n = len(observed)
        if n == 0:
            raise DataError("prediction set is empty")
        if len(self.users) != n or len(self.items) != n or len(predicted) != n:
            raise ValueError("users, items, observed and predicted must align")
        if not np.all(np.isfinite(observed)) or not np.all(np.isfinite(predicted)):
            raise DataError("non-finite observed or predicted value")
        observed.flags.writeable = False
        predicted.flags.writeable = False

    def __len__(self) -> int:
        return len(self.observed)

    @property
    def records(self):
        return list(zip(self.users, self.items, self.observed, self.predicted))

    def abs_errors(self) -> np.ndarray:
        return np.abs(self.predicted - self.observed)


@dataclass(frozen=True)
class CurveBin:
    bin_center: float
    mean_error: float  # NaN when the bin is empty
    stddev_error: float
    count: int


@dataclass(frozen=True, eq=False)
class EccErrorCurve:
    """Sorted (eccentricity, absolute error) points plus a binned summary.

    `points` keeps every record (ties included) for diagnostics; only the
    integration performed by `eauc` collapses ties. `ecc_span` is the value
    range the eccentricities live in, used as the binning domain.
    """

    points: np.ndarray  # shape (n, 2), sorted by column 0
    ecc_span: float
    binned: tuple[CurveBin, ...] = field(default_factory=tuple)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if np.any(np.diff(points[:, 0]) < 0):
            raise ValueError("points must be sorted by eccentricity")
        if np.any(points[:, 1] < 0):
            raise ValueError("absolute errors cannot be negative")
        object.__setattr__(self, "points", points)
        points.flags.writeable = False

    def __len__(self) -> int:
        return len(self.points)


def rmse(p: PredictionSet) -> float:
    """Root mean squared error. Exactly-rounded sum, so reordering the
    records cannot change the result."""
    sq = (p.predicted - p.observed) ** 2
    return math.sqrt(math.fsum(sq) / len(p))


def mae(p: PredictionSet) -> float:
    """Mean absolute error."""
    return math.fsum(p.abs_errors()) / len(p)


def per_value_rmse(p: PredictionSet, max_distinct: int = 1000) -> dict[float, float]:
    """RMSE restricted to each distinct observed value.

    Intended for tasks with a small label alphabet (star ratings and the
    like). More than `max_distinct` distinct labels suggests a continuous
    task where the caller should bin instead, and raises DataError.
    """
    distinct = np.unique(p.observed)
    if len(distinct) > max_distinct:
        raise DataError(
            f"{len(distinct)} distinct observed values (> {max_distinct}); "
            "bin continuous labels instead of using per-value RMSE"
        )
    sq = (p.predicted - p.observed) ** 2
    out: dict[float, float] = {}
    for v in distinct:
        mask = p.observed == v
        out[float(v)] = math.sqrt(math.fsum(sq[mask]) / int(mask.sum()))
    return out


def _sorted_ecc_error(stats: EntityStats, p: PredictionSet):
    """Per-record eccentricity and absolute error, canonically ordered.

    Lexicographic (ecc, error) order makes every downstream reduction
    independent of the input record order, bit for bit.
    """
    dmv_vals, cold_u, cold_i = dmv_array(stats, p.users, p.items)
    ecc = np.abs(p.observed - dmv_vals)
    err = p.abs_errors()
    order = np.lexsort((err, ecc))
    return ecc[order], err[order], cold_u, cold_i


def eauc(
    stats: EntityStats, p: PredictionSet, bounds: ValueBounds
) -> tuple[float, EccErrorCurve]:
    """Normalized area under the eccentricity vs. absolute-error curve.

    Sorts records by ascending eccentricity, collapses ties to their mean
    error, accumulates trapezoids 0.5 * (ecc_j - ecc_{j-1}) * (err_j +
    err_{j-1}), and divides by the squared value range. Returns the score
    and the (uncollapsed) curve.
    """
    if len(p) < 2:
        raise DataError("need at least 2 predictions for a nonzero-width integral")
    span = bounds.span
    ecc_sorted, err_sorted, _, _ = _sorted_ecc_error(stats, p)
    merged_ecc, merged_err = _collapse_ties(ecc_sorted, err_sorted)
    area = float(
        np.sum(0.5 * np.diff(merged_ecc) * (merged_err[1:] + merged_err[:-1]))
    )
    score = area / (span * span)
    curve = EccErrorCurve(
        points=np.column_stack([ecc_sorted, err_sorted]), ecc_span=span
    )
    return score, ecc_error_curve_binned(curve, DEFAULT_CURVE_BINS)


def _collapse_ties(ecc_sorted: np.ndarray, err_sorted: np.ndarray):
    uniq, start, counts = np.unique(ecc_sorted, return_index=True, return_counts=True)
    if len(uniq) == len(ecc_sorted):
        return ecc_sorted, err_sorted
    mean_err = np.add.reduceat(err_sorted, start) / counts
    return uniq, mean_err


def ecc_error_curve_binned(curve: EccErrorCurve, n_bins: int) -> EccErrorCurve:
    """Fixed-width binned summary of a curve over [0, ecc_span].

    Empty bins are emitted with count 0 and NaN mean/stddev so the bin grid
    stays rectangular for plotting.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    ecc = curve.points[:, 0]
    err = curve.points[:, 1]
    width = curve.ecc_span / n_bins
    idx = np.minimum((ecc / width).astype(np.int64), n_bins - 1)
    bins = []
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        if count:
            sel = err[mask]
            mean = float(sel.mean())
            std = float(sel.std())
        else:
            mean = math.nan
            std = math.nan
        bins.append(CurveBin((b + 0.5) * width, mean, std, count))
    return EccErrorCurve(points=curve.points, ecc_span=curve.ecc_span, binned=tuple(bins))


def dmv_stratified_report(
    stats: EntityStats, p: PredictionSet, dmv_band: tuple[float, float]
) -> list[tuple[float, float, float]]:
    """Prediction behaviour inside a DMV band, grouped by observed value.

    Keeps the records whose DMV lies in [band_lo, band_hi] and reports
    (observed value, mean prediction, stddev of predictions) per distinct
    observed value. An empty selection yields an empty list. A predictor
    with no DMV skew has group means on the diagonal; a DMV-anchored one
    compresses them into the band.
    """
    lo, hi = dmv_band
    if not (lo <= hi):
        raise ValueError(f"band lo {lo} > hi {hi}")
    b = stats.bounds
    if lo < b.min_value or hi > b.max_value:
        raise ValueError(f"band ({lo}, {hi}) outside bounds")
    dmv_vals, _, _ = dmv_array(stats, p.users, p.items)
    mask = (dmv_vals >= lo) & (dmv_vals <= hi)
    if not mask.any():
        return []
    obs = p.observed[mask]
    pred = p.predicted[mask]
    rows = []
    for v in np.unique(obs):
        sel = pred[obs == v]
        rows.append((float(v), float(sel.mean()), float(sel.std())))
    return rows


def save_curve_csv(curve: EccErrorCurve, path: str | os.PathLike) -> None:
    """Raw points as `ecc,abs_error` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ecc", "abs_error"])
        for e, a in curve.points:
            writer.writerow([repr(float(e)), repr(float(a))])


def load_curve_csv(path: str | os.PathLike, ecc_span: float) -> EccErrorCurve:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["ecc", "abs_error"]:
            raise DataError(f"{path}: expected header ecc,abs_error")
        pts = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pts.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise DataError(f"{path}: line {lineno}: bad curve row") from None
    if not pts:
        raise DataError(f"{path}: no curve points")
    pts.sort(key=lambda t: t[0])
    return EccErrorCurve(points=np.array(pts), ecc_span=ecc_span)


def save_binned_csv(curve: EccErrorCurve, path: str | os.PathLike) -> None:
    """Binned summary as `bin_center,mean,std,count` (empty bins have blank stats)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_center", "mean", "std", "count"])
        for b in curve.binned:
            mean = "" if math.isnan(b.mean_error) else repr(b.mean_error)
            std = "" if math.isnan(b.stddev_error) else repr(b.stddev_error)
            writer.writerow([repr(b.bin_center), mean, std, b.count])


def save_predictions_csv(p: PredictionSet, path: str | os.PathLike) -> None:
    """Predictions as `user_id,item_id,observed,predicted` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "observed", "predicted"])
        for u, i, o, r in zip(p.users, p.items, p.observed, p.predicted):
            writer.writerow([u, i, repr(float(o)), repr(float(r))])


def load_predictions_csv(
    path: str | os.PathLike, bounds: ValueBounds, model_name: str = "file"
) -> PredictionSet:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["user_id", "item_id", "observed", "predicted"]
        if header is None or [h.strip() for h in header] != expected:
            raise DataError(f"{path}: expected header {','.join(expected)!r}")
        users, items, obs, pred = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}: line {lineno}: expected 4 fields")
            try:
                users.append(row[0].strip())
                items.append(row[1].strip())
                obs.append(float(row[2]))
                pred.append(float(row[3]))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: bad prediction row") from None
    if not users:
        raise DataError(f"{path}: no prediction rows")
    return PredictionSet(
        users=tuple(users),
        items=tuple(items),
        observed=np.array(obs),
        predicted=np.array(pred),
        model_name=model_name,
        bounds=bounds,
    )
