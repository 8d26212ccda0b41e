"""Batch command-line interface.

Subcommands: split, synth, train-mf, predict, difficulty, evaluate, correct,
pipeline, curve. Everything is non-interactive and deterministic given the
seeds in play; reports rerun byte-identically.

Exit codes: 0 success, 2 argument error, 3 data error, 4 training/fit error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from . import baselines as bl
from .benchmark import movielens100k_like
from .corrections import (
    CORRECTION_KINDS,
    apply_correction,
    build_correction_set,
    carve_correction_set,
    fit_forest_correction,
    fit_linear_correction,
    load_correction,
    save_correction,
)
from .data import (
    BoundsSource,
    Dataset,
    ValueBounds,
    load_interactions,
    rating_bounds,
    save_csv,
    split_train_test,
    write_split,
)
from .difficulty import dataset_ks, dump_difficulty_csv
from .entity_stats import compute_entity_means
from .errors import DataError, TrainingError
from .mf import (
    MFHyperparams,
    hyperparams_from_file,
    load_model,
    predict_mf,
    save_model,
    train_mf,
)
from .metrics import load_curve_csv, load_predictions_csv, save_predictions_csv
from .report import align_or_raise, evaluate_predictions, write_report
from .svg import render_curve_svg
from .synthetic import SynthConfig, generate_synthetic, write_sidecar


def _parse_bounds(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"--bounds expects 'min,max', got {text!r}") from None
    return lo, hi


def _bounds_arg(args) -> ValueBounds | None:
    if getattr(args, "bounds", None) is None:
        return None
    lo, hi = _parse_bounds(args.bounds)
    return ValueBounds(lo, hi, BoundsSource.DECLARED)


def _load(args, path, name=None) -> Dataset:
    declared = None
    if getattr(args, "bounds", None) is not None:
        declared = _parse_bounds(args.bounds)
    return load_interactions(path, format=args.data_format, name=name, declared_bounds=declared)


def cmd_split(args) -> int:
    dataset = _load(args, args.input)
    train, test = split_train_test(dataset, args.test_fraction, args.seed)
    name = args.name or dataset.name
    train_path, test_path = write_split(train, test, args.out, name)
    print(f"wrote {train_path} ({len(train)} rows) and {test_path} ({len(test)} rows)")
    return 0


def cmd_synth(args) -> int:
    lo, hi = _parse_bounds(args.bounds)
    cfg = SynthConfig(
        n_users=args.users,
        n_items=args.items,
        density=args.density,
        bounds=ValueBounds(lo, hi, BoundsSource.DECLARED),
        entity_dist=args.dist,
        sigma=args.sigma,
        latent_rank=args.latent_rank,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        name=args.name,
    )
    dataset = generate_synthetic(cfg)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"{cfg.name}.csv")
    save_csv(dataset, csv_path)
    write_sidecar(cfg, os.path.join(args.out, f"{cfg.name}.synth.txt"))
    print(f"wrote {csv_path} ({len(dataset)} interactions)")
    return 0


def cmd_train_mf(args) -> int:
    train = _load(args, args.train)
    hp = hyperparams_from_file(args.hp) if args.hp else MFHyperparams()
    overrides = {}
    for key in ("embedding_dim", "learning_rate", "l2_weight", "max_epochs",
                "batch_size", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        from dataclasses import replace
        hp = replace(hp, **overrides)
    model = train_mf(train, hp, _bounds_arg(args))
    save_model(model, args.out)
    print(f"wrote {args.out} (dim {hp.embedding_dim}, seed {hp.seed})")
    return 0


def cmd_predict(args) -> int:
    test = _load(args, args.test)
    dyads = list(zip(test.users, test.items, test.values))
    if args.model:
        model = load_model(args.model)
        predictions = predict_mf(model, dyads)
    elif args.baseline:
        train = _load(args, args.train)
        bounds = _bounds_arg(args) or rating_bounds(train, test)
        if args.baseline == "random":
            predictions = bl.predict_random(dyads, bounds, args.seed)
        else:
            stats = compute_entity_means(train, bounds)
            predictions = bl.predict_dyad_average(stats, dyads)
    else:
        raise ValueError("predict needs --model or --baseline")
    if args.correction:
        train = _load(args, args.train)
        bounds = predictions.bounds
        stats = compute_entity_means(train, bounds)
        predictions = apply_correction(load_correction(args.correction), predictions, stats)
    save_predictions_csv(predictions, args.out)
    print(f"wrote {args.out} ({len(predictions)} predictions)")
    return 0


def cmd_difficulty(args) -> int:
    train = _load(args, args.train)
    bounds = _bounds_arg(args)
    if bounds is None:
        lo, hi = float(train.values.min()), float(train.values.max())
        bounds = ValueBounds(lo, hi, BoundsSource.INFERRED)
    report = dataset_ks(train, bounds)
    if args.out:
        dump_difficulty_csv(report, train, args.out)
        print(f"wrote {args.out}")
    print(f"dks_dataset = {report.dks_dataset:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    train = _load(args, args.train)
    test = _load(args, args.test)
    bounds = _bounds_arg(args) or rating_bounds(train, test)
    if args.predictions:
        predictions = load_predictions_csv(args.predictions, bounds, model_name=args.model_name)
        align_or_raise(test, predictions)
    elif args.model:
        model = load_model(args.model)
        predictions = predict_mf(model, list(zip(test.users, test.items, test.values)))
    else:
        raise ValueError("evaluate needs --predictions or --model")
    report = evaluate_predictions(train, predictions, bounds, seed=args.seed)
    stem = args.stem or predictions.model_name
    paths = write_report(report, args.out, stem)
    svg_path = os.path.join(args.out, f"{stem}.svg")
    render_curve_svg(report.curve, path=svg_path, label=predictions.model_name)
    paths["svg"] = svg_path
    if args.format == "md":
        with open(paths["markdown"], "r", encoding="utf-8") as fh:
            print(fh.read(), end="")
    else:
        with open(paths["json"], "r", encoding="utf-8") as fh:
            print(fh.read(), end="")
    return 0


def cmd_correct(args) -> int:
    train = _load(args, args.train)
    model = load_model(args.model)
    bounds = model.bounds
    fit_train, correction_split = carve_correction_set(train, args.fraction, args.seed)
    stats = compute_entity_means(fit_train, bounds)
    predictions = predict_mf(
        model,
        list(zip(correction_split.users, correction_split.items, correction_split.values)),
    )
    cs = build_correction_set(predictions, stats)
    if args.kind == "random_forest":
        correction = fit_forest_correction(
            cs, n_trees=args.trees, max_depth=args.depth,
            min_leaf=args.min_leaf, seed=args.seed,
        )
    else:
        variant = {
            "linear": "plain",
            "linear_mlrus_clip": "mlrus_clip",
            "linear_mlrus_sigmoid": "mlrus_sigmoid",
        }[args.kind]
        correction = fit_linear_correction(
            cs, variant, bounds, n_bins=args.bins, seed=args.seed
        )
    save_correction(correction, args.out)
    print(f"wrote {args.out} ({args.kind})")
    return 0


def cmd_curve(args) -> int:
    lo, hi = _parse_bounds(args.bounds)
    span = hi - lo
    curves = [load_curve_csv(path, span) for path in args.curve]
    labels = args.label or [os.path.splitext(os.path.basename(p))[0] for p in args.curve]
    if len(labels) != len(curves):
        raise ValueError("need one --label per --curve")
    render_curve_svg(
        curves[0],
        overlays=list(zip(labels[1:], curves[1:])),
        path=args.out,
        label=labels[0],
    )
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# pipeline


def _parse_config(path: str) -> dict[str, str]:
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            config[key] = value
    return config


def _config_hash(config: dict[str, str]) -> str:
    canonical = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _stage(name: str):
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, (DataError, TrainingError, ValueError)):
                exc.args = (f"stage {name!r}: {exc}",)
            return False

    return _StageContext()


def cmd_pipeline(args) -> int:
    config = _parse_config(args.config)
    run_dir = os.path.join(config.get("out", "runs"), _config_hash(config))
    os.makedirs(run_dir, exist_ok=True)

    seed = int(config.get("seed", "0"))
    test_fraction = float(config.get("test_fraction", "0.1"))
    bounds = None
    if "bounds" in config:
        lo, hi = _parse_bounds(config["bounds"])
        bounds = ValueBounds(lo, hi, BoundsSource.DECLARED)

    with _stage("load"):
        source = config.get("dataset", "benchmark")
        if source == "benchmark":
            dataset = movielens100k_like(seed=int(config.get("benchmark_seed", "101")))
        else:
            declared = (bounds.min_value, bounds.max_value) if bounds else None
            dataset = load_interactions(
                source, format=config.get("format", "csv"), declared_bounds=declared
            )

    with _stage("split"):
        train, test = split_train_test(dataset, test_fraction, seed)
        write_split(train, test, run_dir, dataset.name)
        if bounds is None:
            bounds = rating_bounds(train, test)
        stats = compute_entity_means(train, bounds)
        dyads = list(zip(test.users, test.items, test.values))

    model_kind = config.get("model", "baselines")
    reports = []

    if model_kind == "baselines":
        with _stage("predict"):
            for p in (bl.predict_random(dyads, bounds, seed),
                      bl.predict_dyad_average(stats, dyads)):
                save_predictions_csv(
                    p, os.path.join(run_dir, f"{p.model_name}.predictions.csv")
                )
                reports.append(p)
    elif model_kind == "mf":
        with _stage("train"):
            hp_kwargs = {}
            for key, cast in (
                ("embedding_dim", int), ("learning_rate", float),
                ("l2_weight", float), ("early_stop_patience", int),
                ("early_stop_delta", float), ("max_epochs", int),
                ("batch_size", int), ("validation_fraction", float),
            ):
                if f"mf_{key}" in config:
                    hp_kwargs[key] = cast(config[f"mf_{key}"])
            hp = MFHyperparams(seed=seed, **hp_kwargs)
            model = train_mf(train, hp, bounds)
            save_model(model, os.path.join(run_dir, "mf.ckpt.npz"))
        with _stage("predict"):
            p = predict_mf(model, dyads)
            save_predictions_csv(p, os.path.join(run_dir, "mf.predictions.csv"))
            reports.append(p)
        kind = config.get("correction", "none")
        if kind != "none":
            if kind not in CORRECTION_KINDS:
                raise ValueError(f"unknown correction kind {kind!r}")
            with _stage("correct"):
                fraction = float(config.get("correction_fraction", "0.1"))
                fit_train, corr_split = carve_correction_set(train, fraction, seed)
                corr_stats = compute_entity_means(fit_train, bounds)
                corr_preds = predict_mf(
                    model,
                    list(zip(corr_split.users, corr_split.items, corr_split.values)),
                )
                cs = build_correction_set(corr_preds, corr_stats)
                if kind == "random_forest":
                    correction = fit_forest_correction(
                        cs,
                        n_trees=int(config.get("forest_trees", "100")),
                        max_depth=int(config.get("forest_depth", "10")),
                        min_leaf=int(config.get("forest_min_leaf", "1")),
                        seed=seed,
                    )
                else:
                    variant = {
                        "linear": "plain",
                        "linear_mlrus_clip": "mlrus_clip",
                        "linear_mlrus_sigmoid": "mlrus_sigmoid",
                    }[kind]
                    correction = fit_linear_correction(
                        cs, variant, bounds,
                        n_bins=int(config.get("correction_bins", "10")), seed=seed,
                    )
                save_correction(correction, os.path.join(run_dir, f"{kind}.corr.npz"))
                corrected = apply_correction(correction, p, stats)
                save_predictions_csv(
                    corrected,
                    os.path.join(run_dir, f"{corrected.model_name}.predictions.csv"),
                )
                reports.append(corrected)
    else:
        raise ValueError(f"unknown model {model_kind!r} (use 'baselines' or 'mf')")

    with _stage("evaluate"):
        for p in reports:
            report = evaluate_predictions(train, p, bounds, seed=seed, stats=stats)
            paths = write_report(report, run_dir, p.model_name)
            render_curve_svg(
                report.curve,
                path=os.path.join(run_dir, f"{p.model_name}.svg"),
                label=p.model_name,
            )
            print(f"report: {paths['json']}")
    print(f"run directory: {run_dir}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecceval",
        description="Bias-aware evaluation of dyadic regression models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, bounds=True, seed=True, fmt=True):
        if bounds:
            p.add_argument("--bounds", help="declared value bounds 'min,max'")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if fmt:
            p.add_argument(
                "--data-format", choices=("csv", "movielens_dat"), default="csv",
                dest="data_format", help="input dataset file format",
            )

    p = sub.add_parser("split", help="split a dataset into train/test CSVs")
    p.add_argument("--input", required=True)
    p.add_argument("--test-fraction", type=float, default=0.1, dest="test_fraction")
    p.add_argument("--name", default=None)
    p.add_argument("--out", default=".")
    add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--bounds", required=True)
    p.add_argument("--dist", choices=("normal", "uniform"), default="normal")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--latent-rank", type=int, default=0, dest="latent_rank")
    p.add_argument("--noise-sigma", type=float, default=0.0, dest="noise_sigma")
    p.add_argument("--name", default="synthetic")
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-mf", help="train the matrix-factorization model")
    p.add_argument("--train", required=True)
    p.add_argument("--hp", help="hyperparameter key-value file")
    p.add_argument("--embedding-dim", type=int, default=None, dest="embedding_dim")
    p.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    p.add_argument("--l2-weight", type=float, default=None, dest="l2_weight")
    p.add_argument("--max-epochs", type=int, default=None, dest="max_epochs")
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--out", default="mf.ckpt.npz")
    add_common(p)
    p.set_defaults(func=cmd_train_mf, seed=None)

    p = sub.add_parser("predict", help="predict test dyads with a model or baseline")
    p.add_argument("--test", required=True)
    p.add_argument("--model", help="MF checkpoint")
    p.add_argument("--baseline", choices=("random", "dyad-average"))
    p.add_argument("--train", help="train CSV (needed for baselines/corrections)")
    p.add_argument("--correction", help="fitted correction file to apply")
    p.add_argument("--out", default="predictions.csv")
    add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("difficulty", help="entity-wise uniformity statistic")
    p.add_argument("--train", required=True)
    p.add_argument("--out", default=None, help="optional per-entity CSV dump")
    add_common(p, seed=False)
    p.set_defaults(func=cmd_difficulty)

    p = sub.add_parser("evaluate", help="full evaluation report")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--predictions", help="predictions CSV aligned with test")
    p.add_argument("--model", help="MF checkpoint to predict with")
    p.add_argument("--model-name", default="file", dest="model_name")
    p.add_argument("--stem", default=None, help="output file stem")
    p.add_argument("--out", default=".")
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correct", help="fit a post-training correction")
    p.add_argument("--kind", choices=CORRECTION_KINDS, required=True)
    p.add_argument("--model", required=True, help="MF checkpoint")
    p.add_argument("--train", required=True)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--min-leaf", type=int, default=1, dest="min_leaf")
    p.add_argument("--out", default="correction.npz")
    add_common(p, bounds=False, fmt=True)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("pipeline", help="run split/train/predict/correct/evaluate")
    p.add_argument("config", help="flat key-value config file")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("curve", help="render curve CSVs to SVG")
    p.add_argument("--curve", action="append", required=True)
    p.add_argument("--label", action="append")
    p.add_argument("--bounds", required=True)
    p.add_argument("--out", default="curve.svg")
    p.set_defaults(func=cmd_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
