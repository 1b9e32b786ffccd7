"""Dense linear-algebra primitives shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects. A "PSD matrix" is a square
symmetric array with no eigenvalue meaningfully below zero, and an
"orthonormal basis" is an ``(n, m)`` array with orthonormal columns; the
``check_*`` helpers enforce those contracts at the boundary of each operation.
"""
import logging

import numpy as np
import scipy.linalg as la

from .defaults import sim_defaults
from .errors import EmptyComplementError, IllConditionedError, InvalidInputError, ZeroMatrixError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
NEGATIVE_EIGEN_TOL = 1e-8
ORTHONORMAL_TOL = 1e-8
ZERO_FLOOR = 1e-14


def check_psd(S, name: str = "matrix") -> np.ndarray:
    """Return ``S`` as a float array after checking it is symmetric PSD.

    Parameters
    ----------
    S : array_like of shape (d, d)
    name : str
        Used in error messages.

    Raises
    ------
    InvalidInputError
        Non-square, asymmetric beyond ``1e-10 * (1 + max|S|)`` or with an
        eigenvalue below ``-1e-8`` times the largest one.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInputError(f"{name} has non-finite entries")
    scale = 1.0 + np.max(np.abs(S))
    asym = np.max(np.abs(S - S.T))
    if asym > SYMMETRY_TOL * scale:
        raise InvalidInputError(f"{name} is not symmetric (max |S - S^T| = {asym:.3e})")
    eigvals = la.eigvalsh(S)
    largest = max(eigvals[-1], 0.0)
    if eigvals[0] < -NEGATIVE_EIGEN_TOL * largest:
        raise InvalidInputError(f"{name} is not positive semidefinite (smallest eigenvalue {eigvals[0]:.3e})")
    return S


def check_orthonormal(B, name: str = "basis") -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {B.shape}")
    if B.shape[1] > B.shape[0]:
        raise InvalidInputError(f"{name} has more columns ({B.shape[1]}) than rows ({B.shape[0]})")
    if B.shape[1]:
        err = np.max(np.abs(B.T @ B - np.eye(B.shape[1])))
        if err > ORTHONORMAL_TOL:
            raise InvalidInputError(f"{name} columns are not orthonormal (max error {err:.3e})")
    return B


def default_ridge(S) -> float:
    """Ridge used on empirical covariances: ``1e-8 * trace(S) / dim``."""
    S = np.asarray(S, dtype=float)
    return sim_defaults.RIDGE_SCALE * float(np.trace(S)) / S.shape[0]


def _shifted_eigh(S: np.ndarray, ridge: float) -> tuple[np.ndarray, np.ndarray]:
    if ridge < 0:
        raise InvalidInputError(f"ridge must be nonnegative, got {ridge}")
    shifted = S + ridge * np.eye(S.shape[0])
    return la.eigh(shifted)


def sym_sqrt(S, ridge: float = 0.0) -> np.ndarray:
    """Symmetric square root ``Q`` with ``Q @ Q = S + ridge * I``.

    Eigenvalues are clamped at zero before the root, so tiny negative
    round-off in a PSD input does not produce NaNs.
    """
    S = check_psd(S)
    w, V = _shifted_eigh(S, ridge)
    w = np.clip(w, 0.0, None)
    Q = (V * np.sqrt(w)) @ V.T
    return (Q + Q.T) / 2


def sym_inv_sqrt(S, ridge: float = 0.0) -> np.ndarray:
    """Whitening matrix ``W`` with ``W @ (S + ridge * I) @ W = I``.

    Raises
    ------
    IllConditionedError
        When the smallest eigenvalue of ``S + ridge * I`` is below
        ``1e-12`` times the largest.
    """
    S = check_psd(S)
    w, V = _shifted_eigh(S, ridge)
    if w[-1] <= 0 or w[0] < sim_defaults.ILL_CONDITIONED * w[-1]:
        raise IllConditionedError(
            f"matrix is ill-conditioned: smallest eigenvalue {w[0]:.3e} vs largest {w[-1]:.3e}",
            eigenvalue=float(w[0]),
        )
    W = (V / np.sqrt(w)) @ V.T
    return (W + W.T) / 2


def orthonormal_basis(A, rank_tol: float = sim_defaults.RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``A``.

    The numerical rank counts singular values at or above
    ``rank_tol`` times the largest one.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    U, s, _ = la.svd(A, full_matrices=False)
    if s[0] < ZERO_FLOOR:
        raise ZeroMatrixError(f"matrix is numerically zero (largest singular value {s[0]:.3e})")
    rank = int(np.count_nonzero(s >= rank_tol * s[0]))
    return U[:, :rank]


def orthonormal_complement(B) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(B)``."""
    B = check_orthonormal(B)
    n, m = B.shape
    if m == n:
        raise EmptyComplementError(f"basis already spans R^{n}")
    if m == 0:
        return np.eye(n)
    U, _, _ = la.svd(B, full_matrices=True)
    return U[:, m:]


def principal_angles(B1, B2) -> np.ndarray:
    """Principal angles in radians, ascending, between two column spaces.

    Large angles come from the arccos of the singular values of
    ``B1.T @ B2`` (clamped into [0, 1]); angles below pi/4 are taken from
    the arcsin branch, which keeps them accurate to machine precision
    instead of ``sqrt(eps)``.
    """
    B1 = np.asarray(B1, dtype=float)
    B2 = np.asarray(B2, dtype=float)
    if B1.ndim == 1:
        B1 = B1[:, None]
    if B2.ndim == 1:
        B2 = B2[:, None]
    if B1.shape[0] != B2.shape[0]:
        raise InvalidInputError(f"ambient dimensions differ: {B1.shape[0]} vs {B2.shape[0]}")
    if B1.shape[1] == 0 or B2.shape[1] == 0:
        return np.empty(0)
    return np.sort(la.subspace_angles(B1, B2))


def max_principal_angle(B1, B2) -> float:
    angles = principal_angles(B1, B2)
    return float(angles[-1]) if angles.size else 0.0
