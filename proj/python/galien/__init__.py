"""Chaos-aware load forecasting: diagnostics, delay embedding, and models."""

from _galien import (
    Forecaster,
    GalienError,
    equivalence_params,
    estimate_delay,
    estimate_dim,
    generate,
    load_series,
    mae,
    mape,
    mi_profile,
    mutual_information,
    patch_matrix,
    train_forecaster,
    trajectory_matrix,
    wolf_lle,
)

__all__ = [
    "Forecaster",
    "GalienError",
    "equivalence_params",
    "estimate_delay",
    "estimate_dim",
    "generate",
    "load_series",
    "mae",
    "mape",
    "mi_profile",
    "mutual_information",
    "patch_matrix",
    "train_forecaster",
    "trajectory_matrix",
    "wolf_lle",
]

__version__ = "0.1.0"
