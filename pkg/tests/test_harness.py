import json
import math

import numpy as np
import pytest

from triview.core.errors import ConfigError, DegenerateModelError
from triview.core.weighting import WeightingDiagnostics
from triview.experiments import harness
from triview.experiments.config import ExperimentConfig, load_config
from triview.experiments.records import CSV_HEADER, TrialRecord, records_csv, summarize_groups, write_results


def small(experiment, **overrides):
    settings = dict(experiment=experiment, k=2, trials=3, unlabeled_n=2000, labeled_n=200)
    settings.update(overrides)
    return ExperimentConfig(**settings)


def test_config_defaults():
    config = ExperimentConfig(experiment="exp3")
    assert config.k == 10
    assert config.trials == 25
    assert config.labeled_n == [5000]
    assert config.labeled_size_groups == [40, 80, 150, 400]
    assert ExperimentConfig(experiment="exp2").sample_size_groups == [500, 1000, 2000, 4000, 8000, 10000, 20000]


@pytest.mark.parametrize(
    "bad",
    [{"trials": 0}, {"unlabeled_n": 1}, {"labeled_n": [1, 40]}, {"workers": 0}, {"loading_floor": -1.0}, {"colour": "red"}],
)
def test_config_rejects_invalid_values(bad):
    with pytest.raises(ConfigError):
        load_config("exp1", overrides=bad)


def test_config_file_then_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('k = 4\ntrials = 7\neval_mode = "holdout"\nlabeled_n = 300\n')
    config = load_config("exp1", path, {"trials": 2, "master_seed": None})
    assert (config.k, config.trials, config.eval_mode, config.labeled_n) == (4, 2, "holdout", [300])
    with pytest.raises(ConfigError):
        load_config("exp1", tmp_path / "missing.toml")


def test_exp1_records():
    records = harness.run_exp1(small("exp1"))
    assert [r.trial_index for r in records] == [0, 1, 2]
    for r in records:
        assert not r.failed
        assert r.feature_dims == (6, 2, 2)
        assert min(r.loss_s1, r.loss_s2, r.loss_s3) >= 0.25 - 1e-9
        assert r.ratio_s2_s1 == pytest.approx(r.loss_s2 / r.loss_s1, rel=1e-12)
        assert r.ratio_s3_s1 == pytest.approx(r.loss_s3 / r.loss_s1, rel=1e-12)
        assert 0 <= r.principal_angle_max <= np.pi / 2


def test_same_seed_same_records():
    config = small("exp1", trials=2, master_seed=5)
    assert records_csv(harness.run_exp1(config)) == records_csv(harness.run_exp1(config))
    other = small("exp1", trials=2, master_seed=6)
    assert records_csv(harness.run_exp1(config)) != records_csv(harness.run_exp1(other))


def test_records_do_not_depend_on_worker_count():
    serial = harness.run_exp2(small("exp2", trials=2, sample_size_groups=[500, 1000]))
    parallel = harness.run_exp2(small("exp2", trials=2, sample_size_groups=[500, 1000], workers=2))
    assert [r.sort_key for r in serial] == [r.sort_key for r in parallel]
    assert [r.model_seed for r in serial] == [r.model_seed for r in parallel]
    for name in ("s1", "s2"):
        assert np.allclose([r.loss(name) for r in serial], [r.loss(name) for r in parallel], rtol=1e-10, atol=0)


def test_exact_moments_make_fusion_lossless():
    records = harness.run_exp1(small("exp1", exact_moments=True))
    for r in records:
        assert r.ratio_s2_s1 == pytest.approx(1.0, abs=1e-8)
        assert r.unlabeled_n == 0
        assert r.principal_angle_max < 1e-7


def test_holdout_evaluation():
    records = harness.run_exp1(small("exp1", trials=2, eval_mode="holdout", holdout_n=5000))
    for r in records:
        assert all(math.isfinite(r.loss(name)) and r.loss(name) > 0 for name in ("s1", "s2", "s3"))


def test_exp2_groups_share_models_and_labels():
    records = harness.run_exp2(small("exp2", trials=2, sample_size_groups=[500, 4000]))
    assert [r.group_label for r in records] == ["unlabeled=500"] * 2 + ["unlabeled=4000"] * 2
    assert all(r.feature_sets == ("s1", "s2") and math.isnan(r.loss_s3) for r in records)
    first, second = records[:2], records[2:]
    for a, b in zip(first, second):
        assert a.model_seed == b.model_seed
        assert a.loss_s1 == b.loss_s1
        assert (a.unlabeled_n, b.unlabeled_n) == (500, 4000)


def test_exp2_without_pairing_draws_fresh_models():
    records = harness.run_exp2(small("exp2", trials=1, sample_size_groups=[500, 4000], paired_models=False))
    assert records[0].model_seed != records[1].model_seed


def test_exp3_small_labeled_groups():
    config = small("exp3", k=10, trials=2, unlabeled_n=5000, labeled_size_groups=[40, 400])
    records = harness.run_exp3(config)
    assert [r.labeled_n for r in records] == [40, 40, 400, 400]
    assert all(not r.failed and r.feature_dims[:2] == (30, 10) for r in records)


def test_failed_trials_are_recorded_and_excluded(monkeypatch):
    def degenerate(*args, **kwargs):
        raise DegenerateModelError("embedded R is rank deficient", margin=0.0)

    monkeypatch.setattr(harness, "fit", degenerate)
    config = small("exp1", trials=2)
    records = harness.run_exp1(config)
    assert all(r.failed and "DegenerateModelError" in r.failure_reason for r in records)
    summary = harness.build_summary(config, records)
    assert summary["excluded_failed"] == 2
    assert summary["groups"][0]["loss"]["s1"]["count"] == 0
    assert records_csv(records).count("\n") == 1 + 2 * 3


def test_summary_matches_records():
    config = small("exp1", trials=5, labeled_n=[200, 1000])
    records = harness.run_exp1(config)
    groups = summarize_groups(records)
    assert [g["group_label"] for g in groups] == ["labeled=200", "labeled=1000"]
    for group in groups:
        members = [r for r in records if r.group_index == group["group_index"]]
        for name in ("s1", "s2", "s3"):
            losses = [r.loss(name) for r in members]
            assert group["loss"][name]["median"] == pytest.approx(np.median(losses), abs=1e-12)
            assert group["loss"][name]["q1"] == pytest.approx(np.percentile(losses, 25), abs=1e-12)
        ratios = [r.ratio_s2_s1 for r in members]
        assert group["ratio_to_s1"]["s2"]["median"] == pytest.approx(np.median(ratios), abs=1e-12)


def test_write_results(tmp_path):
    config = small("exp1", trials=2, output_dir=tmp_path)
    records = harness.run_exp1(config)
    csv_path, json_path = write_results(tmp_path, records, harness.build_summary(config, records))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 3
    summary = json.loads(json_path.read_text())
    assert summary["experiment"] == "exp1"
    assert summary["config"]["k"] == 2
    assert not list(tmp_path.glob("*.tmp"))


def test_non_finite_values_are_written_as_null(tmp_path):
    config = ExperimentConfig(experiment="oracle_check", trials=1, oracle_ks=[1], output_dir=tmp_path)
    records = [TrialRecord(experiment="oracle_check", trial_index=0, model_seed=1, failed=True)]
    summary = harness.build_summary(config, records)
    summary["witnesses"] = {"k=1": {"principal_angle_max": float("nan"), "loss_gap": float("inf")}}
    _, json_path, projections_path = write_results(tmp_path, records, summary, [{"k": 1, "u1": [float("nan")]}])
    text = json_path.read_text()
    assert "NaN" not in text and "Infinity" not in text
    witnesses = json.loads(text)["witnesses"]["k=1"]
    assert witnesses == {"principal_angle_max": None, "loss_gap": None}
    assert json.loads(projections_path.read_text()) == [{"k": 1, "u1": [None]}]


def test_oracle_check_passes():
    config = ExperimentConfig(experiment="oracle_check", trials=3, oracle_ks=[1, 2, 3])
    result = harness.run_oracle_check(config)
    assert result.passed
    assert set(result.witnesses) == {"k=1", "k=2", "k=3"}
    assert len(result.records) == 9
    for witnesses in result.witnesses.values():
        assert set(witnesses) == set(harness.WITNESSES)
        assert all(value < 1e-7 for value in witnesses.values())
    summary = harness.build_summary(config, result)
    assert summary["passed"] is True and summary["tolerance"] == 1e-7
    assert [(p["group_label"], p["trial_index"]) for p in result.projections] == [
        (f"k={k}", t) for k in (1, 2, 3) for t in range(3)
    ]
    for p in result.projections:
        k = p["k"]
        assert len(p["u1"]) == 3 * k * k and len(p["r_embedded"]) == 6 * k * k
        assert p["r_smallest_singular_value"] > 0


def test_oracle_check_reports_large_witnesses(monkeypatch):
    def off_target(proj, moments):
        return WeightingDiagnostics(1.0, 1.0, (0.5,), 1.0, 1.0)

    monkeypatch.setattr(harness, "validate", off_target)
    result = harness.run_oracle_check(ExperimentConfig(experiment="oracle_check", trials=2, oracle_ks=[2]))
    assert not result.passed


def test_oracle_check_counts_degenerate_models(monkeypatch):
    def degenerate(*args, **kwargs):
        raise DegenerateModelError("embedded R is rank deficient", margin=0.0)

    monkeypatch.setattr(harness, "fit", degenerate)
    result = harness.run_oracle_check(ExperimentConfig(experiment="oracle_check", trials=2, oracle_ks=[1]))
    assert result.degenerate == 2
    assert not result.passed
    assert result.projections == []


def _medians(records, attribute):
    groups = {}
    for r in records:
        groups.setdefault(r.group_index, []).append(getattr(r, attribute))
    return [float(np.median(groups[g])) for g in sorted(groups)]


@pytest.mark.slow
def test_exp1_fused_features_match_raw_views():
    records = harness.run_exp1(ExperimentConfig(experiment="exp1", trials=20))
    assert 0.98 <= np.median([r.ratio_s2_s1 for r in records]) <= 1.06
    assert np.median([r.ratio_s3_s1 for r in records]) > 1.15


@pytest.mark.slow
def test_exp2_loss_falls_with_unlabeled_data():
    records = harness.run_exp2(ExperimentConfig(experiment="exp2", trials=20))
    s2 = _medians(records, "loss_s2")
    s1 = _medians(records, "loss_s1")
    inversions = [(a, b) for a, b in zip(s2, s2[1:]) if b > a]
    assert len(inversions) <= 1
    assert all(b <= 1.01 * a for a, b in inversions)
    assert s2[-1] <= 1.05 * s1[-1]
    assert 0.25 <= np.mean([r.loss_s1 for r in records]) <= 0.32


@pytest.mark.slow
def test_exp3_fused_features_win_with_few_labels():
    records = harness.run_exp3(ExperimentConfig(experiment="exp3"))
    s1 = _medians(records, "loss_s1")
    s2 = _medians(records, "loss_s2")
    assert s2[0] < s1[0]
    assert abs(s1[-1] - s2[-1]) < abs(s1[0] - s2[0])


@pytest.mark.slow
def test_exp3_gap_closes_with_plentiful_labels():
    records = harness.run_exp3(ExperimentConfig(experiment="exp3", labeled_size_groups=[40, 400, 5000]))
    s1 = _medians(records, "loss_s1")
    s2 = _medians(records, "loss_s2")
    assert abs(s2[-1] - s1[-1]) <= 0.02 * s1[-1]
