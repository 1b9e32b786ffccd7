"""Simulation experiments comparing the feature sets S1, S2 and S3.

S1 is the raw concatenation of the three views, S2 the fused
k-dimensional feature learned without labels, S3 the plain sum of the
views. Every trial is a pure function of the config and its derived seeds,
so trials can run in any order and on any number of workers.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..core.cca import empirical_moments
from ..core.errors import DegenerateModelError, IllConditionedError, SingularDesignError
from ..core.linalg import default_ridge
from ..core.model import (
    GaussianThreeViewModel,
    PopulationMoments,
    derive_seed,
    optimal_loss,
    population_moments,
    random_model,
    sample,
)
from ..core.regression import empirical_loss, ols_fit, optimal_predictor, population_loss
from ..core.weighting import (
    ThreeViewProjection,
    average_views,
    averaging_map,
    fit,
    oracle_angle,
    transform,
    validate,
)
from .config import ExperimentConfig
from .records import NAN, TrialRecord, summarize_groups

logger = logging.getLogger(__name__)

TRIAL_FAILURES = (DegenerateModelError, IllConditionedError, SingularDesignError)


@dataclass(frozen=True)
class TrialPlan:
    group_index: int
    group_label: str | None
    trial_index: int
    unlabeled_n: int
    labeled_n: int
    varied: str  # the sample whose size changes across groups
    feature_sets: tuple[str, ...]
    ridge: float = 0.0


def _seed(config: ExperimentConfig, plan: TrialPlan, stream: str) -> int:
    tag = f"{config.experiment}:{stream}"
    shared = config.paired_models and stream != plan.varied
    if shared:
        return derive_seed(config.master_seed, tag, plan.trial_index)
    return derive_seed(config.master_seed, tag, plan.group_index, plan.trial_index)


def _model(config: ExperimentConfig, k: int, seed: int) -> GaussianThreeViewModel:
    return random_model(
        k, seed, noise_sds=config.noise_sds, y_noise_sd=config.y_noise_sd, loading_floor=config.loading_floor
    )


def _fit_fused(
    config: ExperimentConfig, model: GaussianThreeViewModel, moments: PopulationMoments, plan: TrialPlan
) -> tuple[ThreeViewProjection, np.ndarray | None]:
    if config.exact_moments:
        return fit(moments.sigma_xx, model.k), None
    unlabeled = sample(model, plan.unlabeled_n, _seed(config, plan, "unlabeled"))
    estimate = empirical_moments(unlabeled.views)
    proj = fit(
        estimate.covariance,
        model.k,
        ridge=default_ridge(estimate.covariance),
        fit_sample_count=estimate.sample_count,
    )
    return proj, estimate.mean


def _feature_maps(model: GaussianThreeViewModel, proj: ThreeViewProjection, center) -> dict:
    return {
        "s1": (lambda x: x, np.eye(model.dim), None),
        "s2": (lambda x: transform(proj, x, center), proj.feature_map, center),
        "s3": (average_views, averaging_map(model.k), None),
    }


def run_feature_trial(config: ExperimentConfig, plan: TrialPlan) -> TrialRecord:
    """Fit S2 without labels, regress Y on each feature set and score it."""
    model_seed = _seed(config, plan, "model")
    model = _model(config, config.k, model_seed)
    moments = population_moments(model)
    common = dict(
        experiment=config.experiment,
        trial_index=plan.trial_index,
        model_seed=model_seed,
        feature_dims=(model.dim, model.k, model.k),
        feature_sets=plan.feature_sets,
        labeled_n=plan.labeled_n,
        unlabeled_n=0 if config.exact_moments else plan.unlabeled_n,
        group_label=plan.group_label,
        group_index=plan.group_index,
    )
    try:
        proj, center = _fit_fused(config, model, moments, plan)
        maps = _feature_maps(model, proj, center)

        if config.exact_moments:
            predictors = {name: optimal_predictor(moments, maps[name][1]) for name in plan.feature_sets}
        else:
            labeled = sample(model, plan.labeled_n, _seed(config, plan, "labeled"))
            predictors = {}
            for name in plan.feature_sets:
                features, feature_map, shift = maps[name]
                pred = ols_fit(features(labeled.views), labeled.labels, ridge=plan.ridge)
                predictors[name] = pred.with_feature_map(feature_map, shift)

        if config.eval_mode == "population":
            losses = {name: population_loss(pred, moments).mean_squared_error for name, pred in predictors.items()}
        else:
            holdout = sample(model, config.holdout_n, _seed(config, plan, "holdout"))
            losses = {
                name: empirical_loss(pred, holdout.views @ pred.feature_map, holdout.labels).mean_squared_error
                for name, pred in predictors.items()
            }
        angle = oracle_angle(proj, moments)
    except TRIAL_FAILURES as exc:
        logger.warning("trial %d (%s) failed: %s", plan.trial_index, plan.group_label or config.experiment, exc)
        return TrialRecord(**common, failed=True, failure_reason=f"{type(exc).__name__}: {exc}")

    return TrialRecord(
        **common,
        **{f"loss_{name}": loss for name, loss in losses.items()},
        principal_angle_max=angle,
    )


def _execute(config: ExperimentConfig, plans: list[TrialPlan], trial_fn) -> list:
    logger.info("%s: %d trials on %d worker(s)", config.experiment, len(plans), config.workers)
    results = Parallel(n_jobs=config.workers)(delayed(trial_fn)(config, plan) for plan in plans)
    return sorted(results, key=lambda r: r.sort_key)


def run_exp1(config: ExperimentConfig) -> list[TrialRecord]:
    """S1 vs S2 vs S3 with plentiful labels; one group per labeled size."""
    grouped = len(config.labeled_n) > 1
    plans = [
        TrialPlan(
            group_index=g,
            group_label=f"labeled={n}" if grouped else None,
            trial_index=t,
            unlabeled_n=config.unlabeled_n,
            labeled_n=n,
            varied="labeled",
            feature_sets=("s1", "s2", "s3"),
        )
        for g, n in enumerate(config.labeled_n)
        for t in range(config.trials)
    ]
    return _execute(config, plans, run_feature_trial)


def run_exp2(config: ExperimentConfig) -> list[TrialRecord]:
    """Loss of S2 as the unlabeled sample used to fit it grows; S1 is the reference."""
    plans = [
        TrialPlan(
            group_index=g,
            group_label=f"unlabeled={n}",
            trial_index=t,
            unlabeled_n=n,
            labeled_n=config.labeled_n[0],
            varied="unlabeled",
            feature_sets=("s1", "s2"),
        )
        for g, n in enumerate(config.sample_size_groups)
        for t in range(config.trials)
    ]
    return _execute(config, plans, run_feature_trial)


def run_exp3(config: ExperimentConfig) -> list[TrialRecord]:
    """S1 vs S2 when labels are scarce; S2 is fitted on ``unlabeled_n`` samples."""
    plans = [
        TrialPlan(
            group_index=g,
            group_label=f"labeled={n}",
            trial_index=t,
            unlabeled_n=config.unlabeled_n,
            labeled_n=n,
            varied="labeled",
            feature_sets=("s1", "s2"),
            ridge=config.small_labeled_ridge,
        )
        for g, n in enumerate(config.labeled_size_groups)
        for t in range(config.trials)
    ]
    return _execute(config, plans, run_feature_trial)


@dataclass(frozen=True)
class OracleTrial:
    record: TrialRecord
    projection: dict | None = None
    discarded_hidden_covariance_max: float = NAN
    discarded_label_covariance_max: float = NAN
    loss_gap: float = NAN

    @property
    def principal_angle_max(self) -> float:
        return self.record.principal_angle_max

    @property
    def sort_key(self) -> tuple[int, int]:
        return self.record.sort_key


def run_oracle_trial(config: ExperimentConfig, plan: TrialPlan) -> OracleTrial:
    k = int(plan.group_label.removeprefix("k="))
    model_seed = derive_seed(config.master_seed, "oracle_check:model", plan.group_index, plan.trial_index)
    model = _model(config, k, model_seed)
    moments = population_moments(model)
    common = dict(
        experiment=config.experiment,
        trial_index=plan.trial_index,
        model_seed=model_seed,
        feature_dims=(model.dim, k, k),
        feature_sets=("s1", "s2"),
        group_label=plan.group_label,
        group_index=plan.group_index,
    )
    try:
        proj = fit(moments.sigma_xx, k)
        diagnostics = validate(proj, moments)
    except TRIAL_FAILURES as exc:
        logger.warning("oracle check k=%d trial %d reported degeneracy: %s", k, plan.trial_index, exc)
        return OracleTrial(TrialRecord(**common, failed=True, failure_reason=f"{type(exc).__name__}: {exc}"))
    record = TrialRecord(
        **common,
        loss_s1=optimal_loss(moments),
        loss_s2=optimal_loss(moments, proj.feature_map),
        principal_angle_max=diagnostics.principal_angle_max,
    )
    projection = {"group_label": plan.group_label, "trial_index": plan.trial_index, "model_seed": model_seed}
    return OracleTrial(
        record,
        projection={**projection, **proj.to_record()},
        discarded_hidden_covariance_max=diagnostics.discarded_hidden_covariance_max,
        discarded_label_covariance_max=diagnostics.discarded_label_covariance_max,
        loss_gap=diagnostics.loss_gap,
    )


@dataclass(frozen=True)
class OracleSummary:
    records: list[TrialRecord]
    witnesses: dict[str, dict] = field(default_factory=dict)
    projections: list[dict] = field(default_factory=list)
    tolerance: float = 1e-7
    degenerate: int = 0

    @property
    def passed(self) -> bool:
        return all(
            value is not None and value < self.tolerance
            for group in self.witnesses.values()
            for value in group.values()
        )


WITNESSES = (
    "principal_angle_max",
    "discarded_hidden_covariance_max",
    "discarded_label_covariance_max",
    "loss_gap",
)


def run_oracle_check(config: ExperimentConfig) -> OracleSummary:
    """Fit on exact moments and measure how far the result is from the oracle."""
    plans = [
        TrialPlan(
            group_index=g,
            group_label=f"k={k}",
            trial_index=t,
            unlabeled_n=0,
            labeled_n=0,
            varied="model",
            feature_sets=("s1", "s2"),
        )
        for g, k in enumerate(config.oracle_ks)
        for t in range(config.trials)
    ]
    trials = _execute(config, plans, run_oracle_trial)

    witnesses = {}
    for label in dict.fromkeys(t.record.group_label for t in trials):
        kept = [t for t in trials if t.record.group_label == label and not t.record.failed]
        witnesses[label] = {name: max((getattr(t, name) for t in kept), default=None) for name in WITNESSES}
    summary = OracleSummary(
        records=[t.record for t in trials],
        witnesses=witnesses,
        projections=[t.projection for t in trials if t.projection is not None],
        tolerance=config.oracle_tolerance,
        degenerate=sum(t.record.failed for t in trials),
    )
    log = logger.info if summary.passed else logger.error
    log("oracle check %s (tolerance %.1e, %d degenerate)", "passed" if summary.passed else "FAILED",
        config.oracle_tolerance, summary.degenerate)
    return summary


def build_summary(config: ExperimentConfig, result) -> dict:
    """Structured summary written next to the records."""
    records = result.records if isinstance(result, OracleSummary) else result
    summary = {
        "experiment": config.experiment,
        "config": config.model_dump(mode="json"),
        "groups": summarize_groups(records),
        "excluded_failed": sum(r.failed for r in records),
    }
    if isinstance(result, OracleSummary):
        summary["witnesses"] = result.witnesses
        summary["tolerance"] = result.tolerance
        summary["passed"] = result.passed
    return summary
