import logging

import numpy as np
import pytest

from triview.core.log import ROOT_LOGGER
from triview.core.model import GaussianThreeViewModel, population_moments, random_model


@pytest.fixture(autouse=True)
def _package_logger_propagates():
    # configure_logging() detaches the package logger from the root; caplog needs it attached.
    logger = logging.getLogger(ROOT_LOGGER)
    yield
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_psd(rng):
    def make(d, rank=None):
        G = rng.standard_normal((d, rank or d))
        return G @ G.T
    return make


@pytest.fixture
def scalar_model():
    """k=1 model with all loadings and beta equal to 1."""
    def make(noise_sds=(2.0, 0.5, 0.2), y_noise_sd=0.5):
        return GaussianThreeViewModel(
            k=1,
            loadings=tuple(np.ones((1, 1)) for _ in range(3)),
            beta=np.ones(1),
            view_noise_sd=tuple(noise_sds),
            y_noise_sd=y_noise_sd,
        )
    return make


@pytest.fixture
def default_moments():
    def make(k=3, seed=0, **kwargs):
        return population_moments(random_model(k, seed, **kwargs))
    return make
