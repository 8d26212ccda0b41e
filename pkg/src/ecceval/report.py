"""Evaluation reports: assembly and rendering.

A report bundles the global error metrics, the per-value breakdown, the
eccentricity-area score with its curve, and optionally the dataset
difficulty statistic, plus enough metadata to reproduce the run. JSON output
has a fixed key order and no timestamps, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ValueBounds
from .difficulty import dataset_ks
from .entity_stats import EntityStats, compute_entity_means, dmv_array
from .errors import DataError
from .metrics import (
    EccErrorCurve,
    PredictionSet,
    eauc,
    mae,
    per_value_rmse,
    rmse,
)

REPORT_SCHEMA_VERSION = 1
# reports only break errors down per observed value for small label
# alphabets; beyond this the task is treated as continuous and the
# breakdown is omitted (the metric itself allows up to 1000)
_PER_VALUE_REPORT_LIMIT = 50


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    rmse: float
    mae: float
    per_value_rmse: dict[float, float]
    eauc: float
    curve: EccErrorCurve
    dks: float | None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.rmse >= self.mae >= 0.0):
            raise DataError(
                f"inconsistent metrics: rmse {self.rmse} < mae {self.mae}"
            )
        if not 0.0 <= self.eauc <= 1.0:
            raise DataError(f"eauc {self.eauc} outside [0, 1]")


def align_or_raise(test: Dataset, p: PredictionSet, max_report: int = 5) -> None:
    """Require the prediction rows to match the test rows (user, item, value)
    exactly, position by position."""
    problems = []
    if len(test) != len(p):
        raise DataError(
            f"prediction/test mismatch: {len(p)} predictions vs {len(test)} test rows"
        )
    for k, (u, i, v) in enumerate(zip(test.users, test.items, test.values)):
        if p.users[k] != u or p.items[k] != i or p.observed[k] != v:
            problems.append(
                f"  row {k}: test ({u}, {i}, {v!r}) vs prediction "
                f"({p.users[k]}, {p.items[k]}, {p.observed[k]!r})"
            )
            if len(problems) >= max_report:
                break
    if problems:
        raise DataError(
            "prediction/test mismatch on rows:\n" + "\n".join(problems)
        )


def evaluate_predictions(
    train: Dataset,
    p: PredictionSet,
    bounds: ValueBounds,
    seed: int | None = None,
    include_dks: bool = True,
    stats: EntityStats | None = None,
) -> EvaluationReport:
    """Full evaluation of one prediction set against a train split."""
    if stats is None:
        stats = compute_entity_means(train, bounds)
    score, curve = eauc(stats, p, bounds)
    try:
        per_value = per_value_rmse(p, _PER_VALUE_REPORT_LIMIT)
    except DataError:
        per_value = {}  # continuous labels: the per-value breakdown is omitted
    dks = dataset_ks(train, bounds).dks_dataset if include_dks else None
    _, cold_users, cold_items = dmv_array(stats, p.users, p.items)
    metadata = {
        "model": p.model_name,
        "dataset": train.name,
        "seed": seed,
        "bounds_min": bounds.min_value,
        "bounds_max": bounds.max_value,
        "bounds_source": bounds.source.value,
        "n_train": len(train),
        "n_test": len(p),
        "cold_start_users": cold_users,
        "cold_start_items": cold_items,
    }
    return EvaluationReport(
        rmse=rmse(p),
        mae=mae(p),
        per_value_rmse=per_value,
        eauc=score,
        curve=curve,
        dks=dks,
        metadata=metadata,
    )


def report_to_json(report: EvaluationReport) -> str:
    """Stable-key-order JSON (byte-identical across identical runs)."""
    m = report.metadata
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "model": m.get("model"),
        "dataset": m.get("dataset"),
        "seed": m.get("seed"),
        "bounds": {
            "min": m.get("bounds_min"),
            "max": m.get("bounds_max"),
            "source": m.get("bounds_source"),
        },
        "metrics": {
            "rmse": report.rmse,
            "mae": report.mae,
            "eauc": report.eauc,
            "dks": report.dks,
        },
        "per_value_rmse": {
            _value_key(v): report.per_value_rmse[v]
            for v in sorted(report.per_value_rmse)
        },
        "curve_binned": [
            {
                "bin_center": b.bin_center,
                "mean": None if math.isnan(b.mean_error) else b.mean_error,
                "std": None if math.isnan(b.stddev_error) else b.stddev_error,
                "count": b.count,
            }
            for b in report.curve.binned
        ],
        "counts": {
            "n_train": m.get("n_train"),
            "n_test": m.get("n_test"),
            "cold_start_users": m.get("cold_start_users"),
            "cold_start_items": m.get("cold_start_items"),
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def _value_key(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def report_to_markdown(report: EvaluationReport) -> str:
    m = report.metadata
    lines = [
        f"# Evaluation: {m.get('model')} on {m.get('dataset')}",
        "",
        f"Bounds [{m.get('bounds_min')}, {m.get('bounds_max')}] "
        f"({m.get('bounds_source')}); seed {m.get('seed')}; "
        f"{m.get('n_train')} train / {m.get('n_test')} test rows.",
        "",
        "| metric | value |",
        "| --- | --- |",
        f"| RMSE | {report.rmse:.4f} |",
        f"| MAE | {report.mae:.4f} |",
        f"| EAUC | {report.eauc:.4f} |",
    ]
    if report.dks is not None:
        lines.append(f"| D_KS | {report.dks:.4f} |")
    if report.per_value_rmse:
        lines += [
            "",
            "| observed value | RMSE |",
            "| --- | --- |",
        ]
        for v in sorted(report.per_value_rmse):
            lines.append(f"| {_value_key(v)} | {report.per_value_rmse[v]:.4f} |")
    cold = m.get("cold_start_users", 0) + m.get("cold_start_items", 0)
    if cold:
        lines += [
            "",
            f"Cold-start fallbacks: {m.get('cold_start_users')} user-side, "
            f"{m.get('cold_start_items')} item-side.",
        ]
    return "\n".join(lines) + "\n"


def write_report(
    report: EvaluationReport, out_dir: str | os.PathLike, stem: str
) -> dict[str, str]:
    """Write JSON + Markdown + curve CSVs (+ SVG is the CLI's job)."""
    from .metrics import save_binned_csv, save_curve_csv

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "json": os.path.join(os.fspath(out_dir), f"{stem}.json"),
        "markdown": os.path.join(os.fspath(out_dir), f"{stem}.md"),
        "curve": os.path.join(os.fspath(out_dir), f"{stem}.curve.csv"),
        "binned": os.path.join(os.fspath(out_dir), f"{stem}.binned.csv"),
    }
    with open(paths["json"], "w", encoding="utf-8") as fh:
        fh.write(report_to_json(report))
    with open(paths["markdown"], "w", encoding="utf-8") as fh:
        fh.write(report_to_markdown(report))
    save_curve_csv(report.curve, paths["curve"])
    save_binned_csv(report.curve, paths["binned"])
    return paths
