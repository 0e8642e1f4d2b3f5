"""Weighted least-squares calibration of serial manipulators."""

from ._core import (
    Model,
    Result,
    RobcalError,
    System,
    iid_covariance,
    irls,
    ols,
    optimal_weights,
    reduced_covariance,
    robust_weights,
    run,
    sandwich_covariance,
    study_system,
    weighted_sandwich_covariance,
    wls,
)

__all__ = [
    "Model",
    "Result",
    "RobcalError",
    "System",
    "iid_covariance",
    "irls",
    "ols",
    "optimal_weights",
    "reduced_covariance",
    "robust_weights",
    "run",
    "sandwich_covariance",
    "study_system",
    "weighted_sandwich_covariance",
    "wls",
]
