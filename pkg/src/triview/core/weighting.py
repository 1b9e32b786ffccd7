"""Optimal weighting of three views.

Given the covariance of three ``k``-dimensional views ``X = (X1; X2; X3)``
that share a ``k``-dimensional hidden state, :func:`fit` finds the
``3k x k`` matrix ``U1`` such that ``U1.T @ X`` keeps every linear-predictive
direction of ``X``. It never looks at the hidden state or at labels:

1. ``Q = sqrt(Sigma_XX)``.
2. CCA of ``X1`` against ``(X2; X3)`` and of ``X3`` against ``(X1; X2)``;
   the ``k`` zero-correlation directions on the two-view side of each are
   uncorrelated with the hidden state (``R1`` and ``R2``).
3. Embed ``R1`` into the rows of ``X2, X3`` and ``R2`` into the rows of
   ``X1, X2`` to get the ``3k x 2k`` matrix ``R``.
4. ``P2 = orth(Q @ R)``.
5. ``P1`` = orthogonal complement of ``P2``.
6. ``U1`` solves ``Q @ U1 = P1``.

Views wider than ``k`` are first reduced pairwise to ``k`` canonical
variables each (:func:`fit_views`).
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .cca import bottom_k_directions, cca, reduce_views
from .defaults import sim_defaults
from .errors import DegenerateModelError, IllConditionedError, InvalidInputError
from .linalg import (
    check_psd,
    max_principal_angle,
    orthonormal_basis,
    orthonormal_complement,
    principal_angles,
    sym_sqrt,
)
from .model import PopulationMoments, optimal_loss, oracle_subspace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ThreeViewProjection:
    k: int
    u1: np.ndarray
    q: np.ndarray
    r_embedded: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    r_smallest_singular_value: float
    fit_sample_count: int = 0
    reduction: np.ndarray | None = None

    @property
    def feature_map(self) -> np.ndarray:
        """Map from raw views to the fused k features."""
        return self.u1 if self.reduction is None else self.reduction @ self.u1

    @property
    def discarded_directions(self) -> np.ndarray:
        """Embedded R expressed in raw view coordinates."""
        return self.r_embedded if self.reduction is None else self.reduction @ self.r_embedded

    @property
    def input_dim(self) -> int:
        return self.feature_map.shape[0]

    def to_record(self) -> dict:
        """Flat numeric record for result files (row-major matrices)."""
        return {
            "k": self.k,
            "u1": self.u1.ravel().tolist(),
            "q": self.q.ravel().tolist(),
            "r_embedded": self.r_embedded.ravel().tolist(),
            "r_smallest_singular_value": self.r_smallest_singular_value,
            "fit_sample_count": self.fit_sample_count,
        }


@dataclass(frozen=True)
class WeightingDiagnostics:
    discarded_hidden_covariance_max: float
    discarded_label_covariance_max: float
    principal_angles_to_oracle: tuple[float, ...] | None
    r_rank_margin: float
    loss_gap: float

    @property
    def principal_angle_max(self) -> float:
        if self.principal_angles_to_oracle is None:
            return float("nan")
        return max(self.principal_angles_to_oracle, default=0.0)


def _view_count_check(sigma_xx: np.ndarray, k: int) -> None:
    if k < 1:
        raise InvalidInputError(f"k must be positive, got {k}")
    if sigma_xx.shape[0] != 3 * k:
        raise InvalidInputError(f"expected a {3 * k}x{3 * k} covariance for k={k}, got {sigma_xx.shape}")


def embed_rotations(r1: np.ndarray, r2: np.ndarray, k: int) -> np.ndarray:
    """Place ``R1`` over the rows of views 2, 3 and ``R2`` over views 1, 2.

    Column group one is ``(0; R11; R21)`` and column group two is
    ``(R12; R22; 0)``, so every column only touches the views its CCA saw.
    """
    r = np.zeros((3 * k, 2 * k))
    r[k:, :k] = r1
    r[: 2 * k, k:] = r2
    return r


def fit(sigma_xx, k: int, ridge: float = 0.0, fit_sample_count: int = 0) -> ThreeViewProjection:
    """Fit the fused projection ``U1`` from the covariance of three k-dim views.

    Raises
    ------
    DegenerateModelError
        When the embedded ``R`` is numerically rank deficient.
    """
    sigma_xx = check_psd(sigma_xx, "sigma_xx")
    _view_count_check(sigma_xx, k)
    v1, v23 = slice(0, k), slice(k, 3 * k)
    v12, v3 = slice(0, 2 * k), slice(2 * k, 3 * k)

    q = sym_sqrt(sigma_xx, ridge)

    first = cca(sigma_xx[v1, v1], sigma_xx[v23, v23], sigma_xx[v1, v23], ridge)
    r1 = bottom_k_directions(first, "b", k)
    second = cca(sigma_xx[v3, v3], sigma_xx[v12, v12], sigma_xx[v3, v12], ridge)
    r2 = bottom_k_directions(second, "b", k)

    r_embedded = embed_rotations(r1, r2, k)
    s = la.svdvals(r_embedded)
    margin = s[-1] / s[0]
    if margin < sim_defaults.DEGENERACY_TOL:
        raise DegenerateModelError(f"embedded R is rank deficient (relative margin {margin:.3e})", margin=float(margin))

    p2 = orthonormal_basis(q @ r_embedded, rank_tol=sim_defaults.DEGENERACY_TOL)
    if p2.shape[1] != 2 * k:
        raise DegenerateModelError(f"Q @ R has rank {p2.shape[1]}, expected {2 * k}", margin=float(margin))
    p1 = orthonormal_complement(p2)
    u1 = la.solve(q, p1, assume_a="pos")

    logger.debug("three-view fit: k=%d, R margin %.3e, n=%d", k, margin, fit_sample_count)
    return ThreeViewProjection(
        k=k,
        u1=u1,
        q=q,
        r_embedded=r_embedded,
        p1=p1,
        p2=p2,
        r_smallest_singular_value=float(s[-1]),
        fit_sample_count=fit_sample_count,
    )


def fit_views(sigma_xx, view_dims, k: int, ridge: float = 0.0, fit_sample_count: int = 0) -> ThreeViewProjection:
    """Two-view reduction of each view to ``k`` dims followed by :func:`fit`."""
    sigma_xx = check_psd(sigma_xx, "sigma_xx")
    projections = reduce_views(sigma_xx, view_dims, k, ridge)
    reduction = la.block_diag(*projections)
    reduced = reduction.T @ sigma_xx @ reduction
    reduced = (reduced + reduced.T) / 2
    proj = fit(reduced, k, ridge=ridge, fit_sample_count=fit_sample_count)
    return ThreeViewProjection(
        k=proj.k,
        u1=proj.u1,
        q=proj.q,
        r_embedded=proj.r_embedded,
        p1=proj.p1,
        p2=proj.p2,
        r_smallest_singular_value=proj.r_smallest_singular_value,
        fit_sample_count=fit_sample_count,
        reduction=reduction,
    )


def transform(proj: ThreeViewProjection, x, center=None) -> np.ndarray:
    """Fused features ``(x - center) @ feature_map``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != proj.input_dim:
        raise InvalidInputError(f"expected {proj.input_dim} columns, got {x.shape[1]}")
    if center is not None:
        center = np.asarray(center, dtype=float)
        if center.shape != (proj.input_dim,):
            raise InvalidInputError(f"center must have length {proj.input_dim}, got shape {center.shape}")
        x = x - center
    return x @ proj.feature_map


def validate(proj: ThreeViewProjection, moments: PopulationMoments) -> WeightingDiagnostics:
    """Numeric witnesses that the fit discarded nothing predictive."""
    if moments.dim != proj.input_dim:
        raise InvalidInputError(f"moments are {moments.dim}-dimensional, projection expects {proj.input_dim}")
    discarded = proj.discarded_directions
    hidden_cov = np.max(np.abs(discarded.T @ moments.sigma_xh))
    label_cov = np.max(np.abs(discarded.T @ moments.sigma_xy))

    try:
        angles = tuple(float(a) for a in principal_angles(proj.feature_map, oracle_subspace(moments)))
    except IllConditionedError:
        logger.warning("sigma_xx is singular; no oracle subspace to compare against")
        angles = None

    unit_columns = proj.r_embedded / np.linalg.norm(proj.r_embedded, axis=0)
    rank_margin = la.svdvals(unit_columns)[-1]

    loss_gap = abs(optimal_loss(moments, proj.feature_map) - optimal_loss(moments))
    return WeightingDiagnostics(
        discarded_hidden_covariance_max=float(hidden_cov),
        discarded_label_covariance_max=float(label_cov),
        principal_angles_to_oracle=angles,
        r_rank_margin=float(rank_margin),
        loss_gap=float(loss_gap),
    )


def average_views(x) -> np.ndarray:
    """Element-wise sum of the three view blocks (no division)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] % 3:
        raise InvalidInputError(f"column count {x.shape[1]} is not divisible by 3")
    k = x.shape[1] // 3
    return x[:, :k] + x[:, k: 2 * k] + x[:, 2 * k:]


def averaging_map(k: int) -> np.ndarray:
    """The ``3k x k`` linear map ``(I; I; I)`` behind :func:`average_views`."""
    return np.vstack([np.eye(k)] * 3)


def oracle_angle(proj: ThreeViewProjection, moments: PopulationMoments) -> float:
    """Largest principal angle between the fused span and the oracle subspace."""
    return max_principal_angle(proj.feature_map, oracle_subspace(moments))
