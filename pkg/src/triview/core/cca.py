"""Empirical moments and two-view canonical correlation analysis.

CCA is computed from covariances: both views are whitened with the inverse
symmetric square root of their marginal covariance and the whitened
cross-covariance is decomposed with a *full* SVD, so directions with zero
canonical correlation are returned as well. Those zero-correlation
directions are what the three-view weighting consumes.
"""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg as la

from .defaults import sim_defaults
from .errors import IllConditionedError, InsufficientDataError, InvalidInputError
from .linalg import check_psd, sym_inv_sqrt
from .model import view_slices

logger = logging.getLogger(__name__)

Side = Literal["a", "b"]


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int


@dataclass(frozen=True, eq=False)
class CcaResult:
    """Full canonical rotations of both views.

    Column ``j < len(correlations)`` of ``rot_a`` and ``rot_b`` is the
    ``j``-th pair of canonical directions; the remaining columns of the
    larger side are unpaired and carry correlation 0.
    """
    rot_a: np.ndarray
    rot_b: np.ndarray
    correlations: np.ndarray

    def rotation(self, side: Side) -> np.ndarray:
        if side == "a":
            return self.rot_a
        if side == "b":
            return self.rot_b
        raise InvalidInputError(f"side must be 'a' or 'b', got {side!r}")


def empirical_moments(data) -> CovarianceEstimate:
    """Column means and the unbiased (1/(n-1)) covariance of ``data`` rows."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples for a covariance, got {n}")
    covariance = np.atleast_2d(np.cov(data, rowvar=False))
    covariance = (covariance + covariance.T) / 2
    return CovarianceEstimate(mean=data.mean(axis=0), covariance=covariance, sample_count=n)


def _sign_fix(left: np.ndarray, right: np.ndarray, paired: int) -> tuple[np.ndarray, np.ndarray]:
    left = left.copy()
    right = right.copy()
    for j in range(left.shape[1]):
        if left[np.argmax(np.abs(left[:, j])), j] < 0:
            left[:, j] *= -1
            if j < paired:
                right[:, j] *= -1
    for j in range(paired, right.shape[1]):
        if right[np.argmax(np.abs(right[:, j])), j] < 0:
            right[:, j] *= -1
    return left, right


def cca(sigma_aa, sigma_bb, sigma_ab, ridge: float = 0.0) -> CcaResult:
    """Canonical correlation analysis from second moments.

    Parameters
    ----------
    sigma_aa : ndarray of shape (d_a, d_a)
    sigma_bb : ndarray of shape (d_b, d_b)
    sigma_ab : ndarray of shape (d_a, d_b)
    ridge : float
        Added to both marginal covariances before whitening.

    Returns
    -------
    CcaResult
        ``rot_a`` is ``(d_a, d_a)``, ``rot_b`` is ``(d_b, d_b)`` and
        ``correlations`` holds ``min(d_a, d_b)`` values in descending order.
    """
    sigma_aa = check_psd(sigma_aa, "sigma_aa")
    sigma_bb = check_psd(sigma_bb, "sigma_bb")
    sigma_ab = np.asarray(sigma_ab, dtype=float)
    if sigma_ab.shape != (sigma_aa.shape[0], sigma_bb.shape[0]):
        raise InvalidInputError(
            f"cross covariance has shape {sigma_ab.shape}, expected {(sigma_aa.shape[0], sigma_bb.shape[0])}"
        )

    whiteners = []
    for view, sigma in (("a", sigma_aa), ("b", sigma_bb)):
        try:
            whiteners.append(sym_inv_sqrt(sigma, ridge))
        except IllConditionedError as exc:
            raise IllConditionedError(
                f"marginal covariance of view {view!r} is ill-conditioned: {exc}",
                eigenvalue=exc.eigenvalue,
                view=view,
            ) from exc
    W_a, W_b = whiteners

    T = W_a @ sigma_ab @ W_b
    P, d, Vt = la.svd(T, full_matrices=True)
    P, V = _sign_fix(P, Vt.T, d.size)
    return CcaResult(rot_a=W_a @ P, rot_b=W_b @ V, correlations=np.clip(d, 0.0, 1.0))


def side_correlations(result: CcaResult, side: Side) -> np.ndarray:
    """Correlations of every column of one side's rotation, zero-padded."""
    width = result.rotation(side).shape[1]
    padded = np.zeros(width)
    padded[: result.correlations.size] = result.correlations
    return padded


def _warn_on_straddling_tie(correlations: np.ndarray, k: int, what: str) -> None:
    if 0 < k < correlations.size and correlations[k - 1] - correlations[k] < sim_defaults.TIE_TOL:
        logger.warning(
            "canonical correlations tie across the %s boundary at k=%d (%.3e vs %.3e); the split is arbitrary",
            what, k, correlations[k - 1], correlations[k],
        )


def reduce_view_top_k(result: CcaResult, side: Side, k: int) -> np.ndarray:
    """Projection onto the top-``k`` canonical variables of one view."""
    rotation = result.rotation(side)
    limit = min(result.rot_a.shape[0], result.rot_b.shape[0])
    if not 1 <= k <= limit:
        raise InvalidInputError(f"k must be in [1, {limit}], got {k}")
    _warn_on_straddling_tie(side_correlations(result, side), k, "top-k")
    return rotation[:, :k]


def bottom_k_directions(result: CcaResult, side: Side, k: int) -> np.ndarray:
    """Columns of one side's rotation paired with its ``k`` smallest correlations."""
    rotation = result.rotation(side)
    width = rotation.shape[1]
    if not 1 <= k <= width:
        raise InvalidInputError(f"k must be in [1, {width}], got {k}")
    _warn_on_straddling_tie(side_correlations(result, side), width - k, "bottom-k")
    return rotation[:, width - k:]


def reduce_views(sigma_xx, view_dims, k: int, ridge: float = 0.0) -> list[np.ndarray]:
    """Reduce each of three views to its top-``k`` canonical variables.

    View ``i`` is paired with view ``i + 1`` (cyclically) and keeps the
    a-side of that two-view CCA. Returns three ``(d_i, k)`` projections.
    """
    sigma_xx = check_psd(sigma_xx, "sigma_xx")
    view_dims = tuple(int(d) for d in view_dims)
    if len(view_dims) != 3 or sum(view_dims) != sigma_xx.shape[0]:
        raise InvalidInputError(f"view dimensions {view_dims} do not partition a {sigma_xx.shape[0]}-dim covariance")
    if min(view_dims) < k:
        raise InvalidInputError(f"every view needs at least k={k} dimensions, got {view_dims}")
    slices = view_slices(view_dims)
    projections = []
    for i in range(3):
        a, b = slices[i], slices[(i + 1) % 3]
        result = cca(sigma_xx[a, a], sigma_xx[b, b], sigma_xx[a, b], ridge)
        projections.append(reduce_view_top_k(result, "a", k))
        logger.debug("view %d reduced from %d to %d dims", i + 1, view_dims[i], k)
    return projections
