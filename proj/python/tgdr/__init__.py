"""Threshold gradient descent regularization for multi-class and multi-study data."""

from ._core import (
    Config,
    Fitter,
    Model,
    TgdrError,
    VarianceFormula,
    bagging,
    cross_validate,
    fit,
    gbs,
    load_model,
    pool,
    predict,
    save_model,
    simulate,
)

__all__ = [
    "Config",
    "Fitter",
    "Model",
    "TgdrError",
    "VarianceFormula",
    "bagging",
    "cross_validate",
    "fit",
    "gbs",
    "load_model",
    "pool",
    "predict",
    "save_model",
    "simulate",
]
