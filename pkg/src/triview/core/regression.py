"""Least-squares predictors and their square loss.

Losses come in two flavours: empirical (mean squared residual on a finite
evaluation set) and population (the exact expected square loss under a
model's moments, which needs to know how raw views become features).
"""
import logging
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import scipy.linalg as la

from .errors import InvalidInputError, SingularDesignError
from .model import PopulationMoments, solve_restricted

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LinearPredictor:
    weights: np.ndarray
    intercept: float
    feature_map: np.ndarray | None = None
    labeled_count: int = 0

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.intercept)):
            raise InvalidInputError("predictor has non-finite coefficients")

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    def predict(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        if features.shape[1] != self.feature_dim:
            raise InvalidInputError(f"expected {self.feature_dim} features, got {features.shape[1]}")
        return features @ self.weights + self.intercept

    def with_feature_map(self, feature_map, center=None) -> "LinearPredictor":
        """Attach the raw-to-feature map, folding a centering shift into the intercept.

        A predictor trained on ``(x - center) @ feature_map`` equals one on
        ``x @ feature_map`` with intercept ``b - center @ feature_map @ w``.
        """
        feature_map = np.asarray(feature_map, dtype=float)
        if feature_map.shape[1] != self.feature_dim:
            raise InvalidInputError(f"feature map has {feature_map.shape[1]} outputs, predictor uses {self.feature_dim}")
        intercept = self.intercept
        if center is not None:
            intercept -= float(np.asarray(center, dtype=float) @ feature_map @ self.weights)
        return replace(self, feature_map=feature_map, intercept=intercept)


@dataclass(frozen=True)
class LossReport:
    mean_squared_error: float
    feature_dim: int
    labeled_count: int
    evaluation: Literal["empirical", "population"]
    test_count: int | None = None


def ols_fit(features, targets, ridge: float = 0.0, feature_map=None) -> LinearPredictor:
    """Least squares with intercept and optional L2 penalty on the weights.

    Minimizes ``sum((y - X w - b)**2) + ridge * ||w||**2`` by solving the
    centred problem stacked with ``sqrt(ridge) * I`` rows through an SVD
    based least-squares solver, never forming ``X.T @ X``.

    Raises
    ------
    SingularDesignError
        If ``ridge == 0`` and the centred design is rank deficient (which
        includes ``n < p + 1``).
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(targets, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise InvalidInputError(f"{n} feature rows but {y.shape[0]} targets")
    if ridge < 0:
        raise InvalidInputError(f"ridge must be nonnegative, got {ridge}")
    if ridge == 0 and n < p + 1:
        raise SingularDesignError(f"{n} samples cannot determine {p} weights and an intercept without a ridge")

    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    A = X - x_mean
    b = y - y_mean
    if ridge > 0:
        A = np.vstack([A, np.sqrt(ridge) * np.eye(p)])
        b = np.concatenate([b, np.zeros(p)])

    weights, _, _, s = la.lstsq(A, b, lapack_driver="gelsd")
    if ridge == 0 and (s[0] == 0 or s[-1] < RANK_TOL * s[0]):
        raise SingularDesignError(f"design is rank deficient (singular values {s[-1]:.3e} / {s[0]:.3e})")

    intercept = float(y_mean - x_mean @ weights)
    return LinearPredictor(
        weights=weights,
        intercept=intercept,
        feature_map=None if feature_map is None else np.asarray(feature_map, dtype=float),
        labeled_count=n,
    )


def empirical_loss(pred: LinearPredictor, features, targets) -> LossReport:
    targets = np.asarray(targets, dtype=float).ravel()
    predictions = pred.predict(features)
    if predictions.shape[0] != targets.shape[0]:
        raise InvalidInputError(f"{predictions.shape[0]} feature rows but {targets.shape[0]} targets")
    if targets.shape[0] < 1:
        raise InvalidInputError("evaluation set is empty")
    mse = float(np.mean((targets - predictions) ** 2))
    return LossReport(
        mean_squared_error=mse,
        feature_dim=pred.feature_dim,
        labeled_count=pred.labeled_count,
        evaluation="empirical",
        test_count=int(targets.shape[0]),
    )


def population_loss(pred: LinearPredictor, moments: PopulationMoments) -> LossReport:
    """Exact ``E[(Y - w.T F.T X - b)**2]`` for zero-mean X and Y."""
    if pred.feature_map is None:
        raise InvalidInputError("population loss needs the predictor's feature map")
    F = pred.feature_map
    if F.shape != (moments.dim, pred.feature_dim):
        raise InvalidInputError(f"feature map has shape {F.shape}, expected {(moments.dim, pred.feature_dim)}")
    a = F @ pred.weights
    loss = (
        moments.var_y
        - 2.0 * float(a @ moments.sigma_xy[:, 0])
        + float(a @ moments.sigma_xx @ a)
        + pred.intercept**2
    )
    return LossReport(
        mean_squared_error=max(loss, 0.0),
        feature_dim=pred.feature_dim,
        labeled_count=pred.labeled_count,
        evaluation="population",
    )


def optimal_predictor(moments: PopulationMoments, feature_map) -> LinearPredictor:
    """Population-optimal predictor on ``feature_map.T @ X`` (zero intercept)."""
    F = np.asarray(feature_map, dtype=float)
    if F.shape[0] != moments.dim:
        raise InvalidInputError(f"feature map has {F.shape[0]} rows, expected {moments.dim}")
    C = F.T @ moments.sigma_xx @ F
    weights = solve_restricted((C + C.T) / 2, F.T @ moments.sigma_xy, "feature covariance")[:, 0]
    return LinearPredictor(weights=weights, intercept=0.0, feature_map=F)
