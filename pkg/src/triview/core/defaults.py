from dataclasses import dataclass


@dataclass(frozen=True)
class SimulationDefaults:
    """Constants of the simulated Gaussian three-view study and numerical tolerances."""
    # Model
    HIDDEN_DIM: int = 10
    VIEW_NOISE_SD: tuple[float, float, float] = (2.0, 0.5, 0.2)
    Y_NOISE_SD: float = 0.5
    LOADING_FLOOR: float = 1.0       # smallest singular value of a drawn loading

    # Sample sizes
    UNLABELED_N: int = 50000
    LABELED_N: int = 5000
    HOLDOUT_N: int = 100000
    SAMPLE_SIZE_GROUPS: tuple[int, ...] = (500, 1000, 2000, 4000, 8000, 10000, 20000)
    LABELED_SIZE_GROUPS: tuple[int, ...] = (40, 80, 150, 400)

    # Trial counts
    TRIALS_EXP1: int = 100
    TRIALS_EXP2: int = 100
    TRIALS_EXP3: int = 25
    TRIALS_ORACLE: int = 20
    TRIALS_SMOKE: int = 10
    ORACLE_KS: tuple[int, ...] = (1, 2, 3, 5, 10)

    # Numerics
    RANK_TOL: float = 1e-10          # relative singular value cut for numerical rank
    RIDGE_SCALE: float = 1e-8        # ridge = RIDGE_SCALE * trace / dim on empirical covariances
    ILL_CONDITIONED: float = 1e-12   # smallest / largest eigenvalue below this is refused
    DEGENERACY_TOL: float = 1e-8     # smallest / largest singular value of embedded R
    TIE_TOL: float = 1e-10           # canonical correlations closer than this are a tie
    SMALL_LABELED_RIDGE: float = 1e-8
    ORACLE_TOLERANCE: float = 1e-7


sim_defaults = SimulationDefaults()
