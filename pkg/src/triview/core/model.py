"""Gaussian three-view model with a shared hidden state.

A ``k``-dimensional hidden state ``H ~ N(0, I_k)`` drives three views and a
scalar target::

    X^i = A_i H + sigma_i * noise_i      (i = 1, 2, 3)
    Y   = beta H + sigma_Y * noise_Y

with all noises independent standard normal. Noise scales are standard
deviations. Everything needed to check the fitted features against ground
truth is computed in closed form here: the exact covariances, the best
linear loss on any subspace and the optimal k-dimensional subspace.
"""
import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .defaults import sim_defaults
from .errors import IllConditionedError, InvalidInputError
from .linalg import check_psd, orthonormal_basis

logger = logging.getLogger(__name__)

FULL_RANK_TOL = 1e-8
MAX_REDRAWS = 100


def derive_seed(master: int, tag: str, *indices: int) -> int:
    """Deterministic 32-bit seed for the stream ``(master, tag, *indices)``."""
    tag_code = int.from_bytes(hashlib.sha256(tag.encode()).digest()[:4], "little")
    entropy = [int(master) & 0xFFFFFFFF, tag_code, *(int(i) for i in indices)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def view_slices(view_dims) -> list[slice]:
    edges = np.concatenate([[0], np.cumsum(view_dims)])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True, eq=False)
class GaussianThreeViewModel:
    k: int
    loadings: tuple[np.ndarray, np.ndarray, np.ndarray]
    beta: np.ndarray
    view_noise_sd: tuple[float, float, float]
    y_noise_sd: float

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"hidden dimension must be positive, got {self.k}")
        if len(self.loadings) != 3 or len(self.view_noise_sd) != 3:
            raise InvalidInputError("a three-view model needs exactly three loadings and three noise scales")
        for i, A in enumerate(self.loadings, start=1):
            if A.ndim != 2 or A.shape[1] != self.k or A.shape[0] < self.k:
                raise InvalidInputError(f"loading A{i} must be d x {self.k} with d >= {self.k}, got {A.shape}")
            smallest = la.svdvals(A)[-1]
            if smallest <= FULL_RANK_TOL:
                raise InvalidInputError(f"loading A{i} is not full rank (smallest singular value {smallest:.3e})")
        if self.beta.shape != (self.k,):
            raise InvalidInputError(f"beta must have length {self.k}, got shape {self.beta.shape}")
        if min(self.view_noise_sd) <= 0 or self.y_noise_sd <= 0:
            raise InvalidInputError("noise scales must be strictly positive")

    @property
    def view_dims(self) -> tuple[int, int, int]:
        return tuple(A.shape[0] for A in self.loadings)

    @property
    def dim(self) -> int:
        return sum(self.view_dims)


@dataclass(frozen=True, eq=False)
class PopulationMoments:
    """Exact second moments of a model; the hidden state has identity covariance."""
    sigma_xx: np.ndarray
    sigma_xh: np.ndarray
    sigma_xy: np.ndarray
    var_y: float
    view_dims: tuple[int, int, int]

    @property
    def k(self) -> int:
        return self.sigma_xh.shape[1]

    @property
    def dim(self) -> int:
        return self.sigma_xx.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    views: np.ndarray
    hidden: np.ndarray
    labels: np.ndarray
    seed: int
    view_dims: tuple[int, int, int] = field(default=None)

    def __post_init__(self):
        if self.views.shape[0] < 1:
            raise InvalidInputError("a dataset needs at least one row")
        if self.view_dims is None:
            object.__setattr__(self, "view_dims", (self.hidden.shape[1],) * 3)
        if self.views.shape[1] != sum(self.view_dims):
            raise InvalidInputError(f"views have {self.views.shape[1]} columns, expected {sum(self.view_dims)}")

    @property
    def n(self) -> int:
        return self.views.shape[0]

    def view(self, i: int) -> np.ndarray:
        """Columns of view ``i`` (0-based)."""
        return self.views[:, view_slices(self.view_dims)[i]]


def _draw_loading(rng: np.random.Generator, rows: int, k: int, floor: float) -> np.ndarray:
    for _ in range(MAX_REDRAWS):
        A = rng.standard_normal((rows, k))
        if la.svdvals(A)[-1] > FULL_RANK_TOL:
            break
        logger.debug("redrawing rank-deficient %dx%d loading", rows, k)
    else:
        raise InvalidInputError(f"could not draw a full-rank {rows}x{k} loading")
    if floor <= 0:
        return A
    # singular vectors stay random; only weak directions are lifted to the floor
    U, s, Vt = la.svd(A, full_matrices=False)
    lifted = int(np.sum(s < floor))
    if lifted:
        logger.debug("lifting %d of %d singular values of a %dx%d loading to %g", lifted, k, rows, k, floor)
    return (U * np.maximum(s, floor)) @ Vt


def random_model(
    k: int,
    seed: int,
    noise_sds=sim_defaults.VIEW_NOISE_SD,
    y_noise_sd: float = sim_defaults.Y_NOISE_SD,
    view_dims=None,
    loading_floor: float = sim_defaults.LOADING_FLOOR,
) -> GaussianThreeViewModel:
    """Model with standard normal loadings and ``beta``.

    Each loading is drawn i.i.d. standard normal, then every singular value
    below ``loading_floor`` is raised to it, so each hidden direction reaches
    each view with at least that gain. ``loading_floor=0`` keeps the raw draw.

    ``view_dims`` defaults to ``(k, k, k)``; larger view dimensions give
    tall full-column-rank loadings.
    """
    if k < 1:
        raise InvalidInputError(f"hidden dimension must be positive, got {k}")
    if loading_floor < 0:
        raise InvalidInputError(f"loading floor must be non-negative, got {loading_floor}")
    view_dims = (k, k, k) if view_dims is None else tuple(int(d) for d in view_dims)
    rng = np.random.default_rng(seed)
    loadings = tuple(_draw_loading(rng, d, k, loading_floor) for d in view_dims)
    beta = rng.standard_normal(k)
    return GaussianThreeViewModel(
        k=k,
        loadings=loadings,
        beta=beta,
        view_noise_sd=tuple(float(s) for s in noise_sds),
        y_noise_sd=float(y_noise_sd),
    )


def population_moments(model: GaussianThreeViewModel) -> PopulationMoments:
    sigma_xh = np.vstack(model.loadings)
    sigma_xx = sigma_xh @ sigma_xh.T
    for sl, sd in zip(view_slices(model.view_dims), model.view_noise_sd):
        sigma_xx[sl, sl] += sd**2 * np.eye(sl.stop - sl.start)
    sigma_xx = (sigma_xx + sigma_xx.T) / 2
    sigma_xy = (sigma_xh @ model.beta)[:, None]
    var_y = float(model.beta @ model.beta + model.y_noise_sd**2)
    return PopulationMoments(
        sigma_xx=sigma_xx,
        sigma_xh=sigma_xh,
        sigma_xy=sigma_xy,
        var_y=var_y,
        view_dims=model.view_dims,
    )


def sample(model: GaussianThreeViewModel, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. rows of (views, hidden, label)."""
    if n < 1:
        raise InvalidInputError(f"sample size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    hidden = rng.standard_normal((n, model.k))
    blocks = [
        hidden @ A.T + sd * rng.standard_normal((n, A.shape[0]))
        for A, sd in zip(model.loadings, model.view_noise_sd)
    ]
    labels = hidden @ model.beta + model.y_noise_sd * rng.standard_normal(n)
    return Dataset(views=np.hstack(blocks), hidden=hidden, labels=labels, seed=seed, view_dims=model.view_dims)


def solve_restricted(C: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    w = la.eigvalsh(C)
    if w[-1] <= 0 or w[0] < sim_defaults.ILL_CONDITIONED * w[-1]:
        raise IllConditionedError(f"{what} is singular (smallest eigenvalue {w[0]:.3e})", eigenvalue=float(w[0]))
    return la.solve(C, b, assume_a="pos")


def optimal_loss(moments: PopulationMoments, subspace=None) -> float:
    """Exact square loss of the best linear predictor of Y from ``W.T @ X``.

    ``subspace`` is any full-column-rank ``(D, m)`` matrix ``W``; the loss
    depends only on its column span. ``None`` means the whole space.
    """
    if subspace is None:
        C, b = moments.sigma_xx, moments.sigma_xy
    else:
        W = np.asarray(subspace, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape[0] != moments.dim:
            raise InvalidInputError(f"subspace has ambient dimension {W.shape[0]}, expected {moments.dim}")
        C = W.T @ moments.sigma_xx @ W
        C = (C + C.T) / 2
        b = W.T @ moments.sigma_xy
    explained = float((b.T @ solve_restricted(C, b, "restricted covariance")).item())
    return max(moments.var_y - explained, 0.0)


def oracle_subspace(moments: PopulationMoments) -> np.ndarray:
    """Orthonormal basis of the columns of ``inv(sigma_xx) @ sigma_xh``.

    This is the span of the best linear estimate of H from X, the
    k-dimensional subspace that keeps every linear-predictive direction.
    """
    check_psd(moments.sigma_xx, "sigma_xx")
    directions = solve_restricted(moments.sigma_xx, moments.sigma_xh, "sigma_xx")
    basis = orthonormal_basis(directions)
    if basis.shape[1] != moments.k:
        raise IllConditionedError(f"oracle subspace has rank {basis.shape[1]}, expected {moments.k}")
    return basis
