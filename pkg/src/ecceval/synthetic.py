"""Synthetic dyadic datasets with controllable per-entity uniformity.

Each user and item gets a latent mean drawn from the central 80% of the
value range (so off-center labels remain representable). Observed values are
drawn around the dyad's latent mean midpoint: either normal with a chosen
sigma (small sigma concentrates every entity's values near its average,
priming eccentricity bias) or uniform over the bounds (the hardest-to-bias
regime). An optional low-rank interaction term adds learnable structure, and
independent noise on top of it, unlearnable error.

Out-of-bounds draws are resampled rather than clipped: probability spikes at
the bounds would corrupt the uniformity statistics this generator exists to
exercise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ValueBounds
from .errors import DataError

_CENTRAL_FRACTION = 0.8
_LATENT_VARIANCE = 0.25  # variance of the rank-k interaction term
_MAX_RESAMPLE_ROUNDS = 64


@dataclass(frozen=True)
class SynthConfig:
    n_users: int
    n_items: int
    density: float
    bounds: ValueBounds
    entity_dist: str = "normal"  # "normal" or "uniform"
    sigma: float = 1.0           # stddev of the normal entity distribution
    latent_rank: int = 0
    noise_sigma: float = 0.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        if self.n_users < 1 or self.n_items < 1:
            raise ValueError("entity counts must be positive")
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must be in (0, 1], got {self.density}")
        if self.entity_dist not in ("normal", "uniform"):
            raise ValueError(f"unknown entity_dist {self.entity_dist!r}")
        if self.entity_dist == "normal" and self.sigma <= 0:
            raise ValueError("sigma must be positive for the normal distribution")
        if self.latent_rank < 0:
            raise ValueError("latent_rank must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Sample a dataset per the config; identical seeds give identical data."""
    n_dyads = int(cfg.density * cfg.n_users * cfg.n_items)
    if n_dyads < 1:
        raise DataError("density too low: zero interactions requested")

    rng = np.random.default_rng(cfg.seed)
    b = cfg.bounds
    margin = 0.5 * (1.0 - _CENTRAL_FRACTION) * b.span
    user_mean = rng.uniform(b.min_value + margin, b.max_value - margin, cfg.n_users)
    item_mean = rng.uniform(b.min_value + margin, b.max_value - margin, cfg.n_items)

    flat = rng.choice(cfg.n_users * cfg.n_items, size=n_dyads, replace=False)
    flat.sort()
    u_idx = flat // cfg.n_items
    i_idx = flat % cfg.n_items

    latent = np.zeros(n_dyads)
    if cfg.latent_rank > 0:
        scale = (_LATENT_VARIANCE / cfg.latent_rank) ** 0.25
        user_factors = rng.normal(0.0, scale, (cfg.n_users, cfg.latent_rank))
        item_factors = rng.normal(0.0, scale, (cfg.n_items, cfg.latent_rank))
        latent = np.sum(user_factors[u_idx] * item_factors[i_idx], axis=1)

    centers = 0.5 * (user_mean[u_idx] + item_mean[i_idx]) + latent
    values = _draw_in_bounds(rng, cfg, centers, latent)

    return Dataset(
        name=cfg.name,
        users=tuple(f"u{k}" for k in u_idx),
        items=tuple(f"i{k}" for k in i_idx),
        values=values,
        declared_bounds=(b.min_value, b.max_value),
    )


def _draw_in_bounds(
    rng, cfg: SynthConfig, centers: np.ndarray, latent: np.ndarray
) -> np.ndarray:
    """Draw every value, redrawing any that lands outside the bounds."""
    b = cfg.bounds

    def draw(rows):
        if cfg.entity_dist == "normal":
            base = rng.normal(centers[rows], cfg.sigma)
        else:
            base = rng.uniform(b.min_value, b.max_value, size=len(rows)) + latent[rows]
        if cfg.noise_sigma > 0:
            base = base + rng.normal(0.0, cfg.noise_sigma, size=len(rows))
        return base

    n = len(centers)
    values = np.empty(n)
    pending = np.arange(n)
    for _ in range(_MAX_RESAMPLE_ROUNDS):
        values[pending] = draw(pending)
        outside = (values[pending] < b.min_value) | (values[pending] > b.max_value)
        pending = pending[outside]
        if len(pending) == 0:
            break
    if len(pending):  # pathological config; keep determinism, stop resampling
        values[pending] = b.clamp(values[pending])
    return values


def write_sidecar(cfg: SynthConfig, path: str | os.PathLike) -> None:
    """Key-value record of the generating config, for reproducibility."""
    lines = [
        f"n_users = {cfg.n_users}",
        f"n_items = {cfg.n_items}",
        f"density = {cfg.density!r}",
        f"bounds = {cfg.bounds.min_value!r},{cfg.bounds.max_value!r}",
        f"entity_dist = {cfg.entity_dist}",
        f"sigma = {cfg.sigma!r}",
        f"latent_rank = {cfg.latent_rank}",
        f"noise_sigma = {cfg.noise_sigma!r}",
        f"seed = {cfg.seed}",
        f"name = {cfg.name}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
