"""Experiment configuration.

Precedence, lowest first: built-in defaults, a TOML file, explicit overrides
(the CLI flags). A TOML file is a flat table of the field names below::

    k = 10
    trials = 20
    master_seed = 7
    sample_size_groups = [500, 1000, 2000]
    eval_mode = "holdout"
"""
import logging
import tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from ..core.defaults import sim_defaults
from ..core.errors import ConfigError

logger = logging.getLogger(__name__)

Experiment = Literal["exp1", "exp2", "exp3", "oracle_check"]

DEFAULT_TRIALS = {
    "exp1": sim_defaults.TRIALS_EXP1,
    "exp2": sim_defaults.TRIALS_EXP2,
    "exp3": sim_defaults.TRIALS_EXP3,
    "oracle_check": sim_defaults.TRIALS_ORACLE,
}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: Experiment
    k: PositiveInt = sim_defaults.HIDDEN_DIM
    noise_sds: tuple[PositiveFloat, PositiveFloat, PositiveFloat] = sim_defaults.VIEW_NOISE_SD
    y_noise_sd: PositiveFloat = sim_defaults.Y_NOISE_SD
    loading_floor: NonNegativeFloat = sim_defaults.LOADING_FLOOR
    trials: PositiveInt
    master_seed: int = 0
    unlabeled_n: int = Field(sim_defaults.UNLABELED_N, ge=2)
    labeled_n: list[int] = Field(default_factory=lambda: [sim_defaults.LABELED_N], min_length=1)
    sample_size_groups: list[int] = Field(default_factory=lambda: list(sim_defaults.SAMPLE_SIZE_GROUPS), min_length=1)
    labeled_size_groups: list[int] = Field(default_factory=lambda: list(sim_defaults.LABELED_SIZE_GROUPS), min_length=1)
    eval_mode: Literal["population", "holdout"] = "population"
    holdout_n: int = Field(sim_defaults.HOLDOUT_N, ge=2)
    output_dir: Path = Path("results")
    workers: int = 1
    exact_moments: bool = False
    paired_models: bool = True
    small_labeled_ridge: NonNegativeFloat = sim_defaults.SMALL_LABELED_RIDGE
    oracle_ks: list[PositiveInt] = Field(default_factory=lambda: list(sim_defaults.ORACLE_KS), min_length=1)
    oracle_tolerance: PositiveFloat = sim_defaults.ORACLE_TOLERANCE

    @model_validator(mode="before")
    @classmethod
    def _default_trials(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("trials") is None:
            data = {**data, "trials": DEFAULT_TRIALS.get(data.get("experiment"), sim_defaults.TRIALS_SMOKE)}
        return data

    @field_validator("labeled_n", mode="before")
    @classmethod
    def _labeled_list(cls, value: Any) -> Any:
        return [value] if isinstance(value, int) else value

    @field_validator("labeled_n", "sample_size_groups", "labeled_size_groups")
    @classmethod
    def _sizes_at_least_two(cls, value: list[int]) -> list[int]:
        small = [n for n in value if n < 2]
        if small:
            raise ValueError(f"every listed size must be at least 2, got {small}")
        return value

    @field_validator("workers")
    @classmethod
    def _workers(cls, value: int) -> int:
        if value == 0 or value < -1:
            raise ValueError("workers must be a positive count or -1 for all cores")
        return value


def load_config(experiment: str, path: Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Build a validated config; ``None`` overrides are ignored.

    Raises
    ------
    ConfigError
        Unreadable file, unknown key or any failed field check.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        logger.debug("loaded %d keys from %s", len(data), path)
    if data.get("experiment", experiment) != experiment:
        logger.warning("config file names experiment %r; running %r", data["experiment"], experiment)
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    data["experiment"] = experiment
    try:
        return ExperimentConfig(**data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
