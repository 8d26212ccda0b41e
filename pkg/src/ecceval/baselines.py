"""The two naive reference predictors.

The random baseline samples continuous uniform values over the task bounds
(its expected RMSE against any label distribution has a closed form, which
the tests exploit). The dyad-average baseline always answers the DMV, so its
absolute error on every example equals that example's eccentricity and its
eccentricity-error curve is exactly the y = x line.
"""

from __future__ import annotations

import numpy as np

from .data import ValueBounds
from .entity_stats import EntityStats, dmv_array
from .metrics import PredictionSet

RANDOM_BASELINE = "random"
DYAD_AVERAGE_BASELINE = "dyad_average"


def _split_dyads(dyads):
    users = tuple(d[0] for d in dyads)
    items = tuple(d[1] for d in dyads)
    observed = np.array([d[2] for d in dyads], dtype=np.float64)
    return users, items, observed


def predict_random(dyads, bounds: ValueBounds, seed: int) -> PredictionSet:
    """I.i.d. uniform predictions on [min_value, max_value], fixed by seed."""
    users, items, observed = _split_dyads(dyads)
    rng = np.random.default_rng(seed)
    predicted = rng.uniform(bounds.min_value, bounds.max_value, size=len(observed))
    return PredictionSet(
        users=users,
        items=items,
        observed=observed,
        predicted=predicted,
        model_name=RANDOM_BASELINE,
        bounds=bounds,
    )


def predict_dyad_average(stats: EntityStats, dyads) -> PredictionSet:
    """Predict the DMV of every dyad (global-mean fallback for cold entities)."""
    users, items, observed = _split_dyads(dyads)
    predicted, _, _ = dmv_array(stats, users, items)
    return PredictionSet(
        users=users,
        items=items,
        observed=observed,
        predicted=predicted,
        model_name=DYAD_AVERAGE_BASELINE,
        bounds=stats.bounds,
    )
