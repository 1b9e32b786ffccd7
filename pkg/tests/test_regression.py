import numpy as np
import pytest

from triview.core.errors import InvalidInputError, SingularDesignError
from triview.core.model import optimal_loss, population_moments, random_model, sample
from triview.core.regression import (
    LinearPredictor,
    empirical_loss,
    ols_fit,
    optimal_predictor,
    population_loss,
)
from triview.core.weighting import fit


def test_ols_interpolates_exact_linear_targets(rng):
    X = rng.standard_normal((30, 4))
    y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 7.0
    pred = ols_fit(X, y)
    assert np.max(np.abs(pred.predict(X) - y)) < 1e-10
    assert pred.intercept == pytest.approx(7.0)
    assert pred.labeled_count == 30
    assert empirical_loss(pred, X, y).mean_squared_error < 1e-18


def test_ols_on_zero_features_with_ridge(rng):
    y = rng.standard_normal(20)
    pred = ols_fit(np.zeros((20, 3)), y, ridge=1e-3)
    assert np.allclose(pred.weights, 0)
    assert pred.intercept == pytest.approx(y.mean())


def test_ols_refuses_underdetermined_designs(rng):
    with pytest.raises(SingularDesignError):
        ols_fit(rng.standard_normal((4, 4)), rng.standard_normal(4))
    with pytest.raises(SingularDesignError):
        ols_fit(np.zeros((20, 3)), rng.standard_normal(20))
    pred = ols_fit(rng.standard_normal((4, 4)), rng.standard_normal(4), ridge=1e-8)
    assert np.all(np.isfinite(pred.weights))
    with pytest.raises(InvalidInputError):
        ols_fit(np.ones((4, 2)), np.ones(3))


def test_ols_never_worse_than_predicting_the_mean(rng):
    X = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    pred = ols_fit(X, y)
    assert empirical_loss(pred, X, y).mean_squared_error <= np.var(y) + 1e-12


def test_ols_converges_to_population_weights():
    model = random_model(3, seed=4)
    moments = population_moments(model)
    data = sample(model, 50000, seed=8)
    w = ols_fit(data.views, data.labels).weights
    w_star = np.linalg.solve(moments.sigma_xx, moments.sigma_xy[:, 0])
    error = w - w_star
    ratio = np.sqrt(error @ moments.sigma_xx @ error) / np.sqrt(w_star @ moments.sigma_xx @ w_star)
    assert ratio < 0.02


def test_empirical_loss_of_the_zero_predictor(rng):
    y = rng.standard_normal(1000)
    y = (y - y.mean()) / y.std()
    zero = LinearPredictor(weights=np.zeros(2), intercept=0.0)
    assert empirical_loss(zero, rng.standard_normal((1000, 2)), y).mean_squared_error == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        empirical_loss(zero, np.ones((3, 3)), np.ones(3))
    with pytest.raises(InvalidInputError):
        empirical_loss(zero, np.ones((3, 2)), np.ones(4))


def test_empirical_loss_agrees_with_population_loss():
    model = random_model(3, seed=6)
    moments = population_moments(model)
    pred = optimal_predictor(moments, np.eye(9))
    holdout = sample(model, 200000, seed=3)
    report = empirical_loss(pred, holdout.views, holdout.labels)
    assert report.evaluation == "empirical" and report.test_count == 200000
    assert report.mean_squared_error == pytest.approx(population_loss(pred, moments).mean_squared_error, abs=0.01)


def test_population_loss_of_the_optimal_predictor(default_moments):
    moments = default_moments()
    proj = fit(moments.sigma_xx, 3)
    for feature_map in (np.eye(9), proj.u1):
        report = population_loss(optimal_predictor(moments, feature_map), moments)
        assert report.evaluation == "population"
        assert report.mean_squared_error == pytest.approx(optimal_loss(moments, feature_map), abs=1e-10)


def test_population_loss_bounds(default_moments, rng):
    moments = default_moments()
    zero = LinearPredictor(weights=np.zeros(9), intercept=0.0, feature_map=np.eye(9))
    assert population_loss(zero, moments).mean_squared_error == pytest.approx(moments.var_y)
    best = optimal_loss(moments)
    for _ in range(20):
        pred = LinearPredictor(weights=rng.standard_normal(9), intercept=rng.standard_normal(), feature_map=np.eye(9))
        assert population_loss(pred, moments).mean_squared_error >= best - 1e-12
    with pytest.raises(InvalidInputError):
        population_loss(LinearPredictor(weights=np.zeros(9), intercept=0.0), moments)


def test_feature_map_folds_the_centering_shift(rng):
    X = rng.standard_normal((40, 6))
    F = rng.standard_normal((6, 2))
    center = X.mean(axis=0) + 1.0
    y = rng.standard_normal(40)
    pred = ols_fit((X - center) @ F, y)
    raw = pred.with_feature_map(F, center)
    assert np.allclose(raw.predict(X @ F), pred.predict((X - center) @ F))
    with pytest.raises(InvalidInputError):
        pred.with_feature_map(np.ones((6, 3)))


def test_non_finite_coefficients_are_refused():
    with pytest.raises(InvalidInputError):
        LinearPredictor(weights=np.array([np.nan]), intercept=0.0)


def test_uncorrelated_extra_features_do_not_change_the_optimum(default_moments):
    moments = default_moments(k=3, seed=9)
    proj = fit(moments.sigma_xx, 3)
    augmented = np.hstack([proj.u1, proj.r_embedded[:, :2]])
    assert optimal_loss(moments, augmented) == pytest.approx(optimal_loss(moments, proj.u1), abs=1e-10)


def test_ols_approaches_the_optimum_as_labels_grow():
    model = random_model(3, seed=11)
    moments = population_moments(model)
    medians = []
    for n in (40, 80, 150, 400, 5000):
        losses = []
        for seed in range(20):
            data = sample(model, n, seed=seed)
            pred = ols_fit(data.views, data.labels).with_feature_map(np.eye(9))
            losses.append(population_loss(pred, moments).mean_squared_error)
        medians.append(np.median(losses))
    assert all(later < earlier for earlier, later in zip(medians, medians[1:]))
    assert medians[-1] - optimal_loss(moments) < 0.01
