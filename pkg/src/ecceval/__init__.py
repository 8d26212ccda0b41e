"""Bias-aware evaluation of dyadic regression models.

Core flow: load or generate a dataset, split it, compute train-side entity
means, evaluate a model's predictions with global error metrics plus the
eccentricity-area score, measure the dataset's difficulty, and optionally
fit post-training corrections to a biased model.
"""

from .baselines import predict_dyad_average, predict_random
from .benchmark import movielens100k_like
from .corrections import (
    Correction,
    CorrectionSet,
    apply_correction,
    build_correction_set,
    carve_correction_set,
    fit_forest_correction,
    fit_linear_correction,
    mlrus_resample,
)
from .data import (
    BoundsSource,
    Dataset,
    Interaction,
    ValueBounds,
    load_interactions,
    rating_bounds,
    save_csv,
    split_train_test,
)
from .difficulty import DifficultyReport, dataset_ks, entity_ks
from .entity_stats import (
    EntityStats,
    compute_entity_means,
    dmv,
    eccentricity,
)
from .errors import DataError, TrainingError
from .metrics import (
    EccErrorCurve,
    PredictionSet,
    dmv_stratified_report,
    eauc,
    ecc_error_curve_binned,
    mae,
    per_value_rmse,
    rmse,
)
from .mf import MFHyperparams, MFModel, predict_mf, train_mf
from .report import EvaluationReport, evaluate_predictions
from .synthetic import SynthConfig, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "BoundsSource",
    "Correction",
    "CorrectionSet",
    "DataError",
    "Dataset",
    "DifficultyReport",
    "EccErrorCurve",
    "EntityStats",
    "EvaluationReport",
    "Interaction",
    "MFHyperparams",
    "MFModel",
    "PredictionSet",
    "SynthConfig",
    "TrainingError",
    "ValueBounds",
    "apply_correction",
    "build_correction_set",
    "carve_correction_set",
    "compute_entity_means",
    "dataset_ks",
    "dmv",
    "dmv_stratified_report",
    "eauc",
    "ecc_error_curve_binned",
    "eccentricity",
    "entity_ks",
    "evaluate_predictions",
    "fit_forest_correction",
    "fit_linear_correction",
    "generate_synthetic",
    "load_interactions",
    "mae",
    "mlrus_resample",
    "movielens100k_like",
    "per_value_rmse",
    "predict_dyad_average",
    "predict_mf",
    "predict_random",
    "rating_bounds",
    "rmse",
    "save_csv",
    "split_train_test",
    "train_mf",
]
