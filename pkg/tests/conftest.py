"""Shared fixtures: the four-degree reference setup and random parameter draws."""

import numpy as np
import pytest

from sisguard.models import DegreeDistribution, ModelParams, make_distribution


def table1_params(c_P: float = 10.0, **changes) -> ModelParams:
    """Four-degree reference parameters (alpha 0.5, beta_P 0.6, beta_U 0.7, gamma 0.3, L 20)."""
    params = ModelParams.uniform(
        4, beta_P=0.6, beta_U=0.7, alpha=0.5, gamma=0.3, L=20.0, c_P=c_P
    )
    return params.with_updates(**changes) if changes else params


def random_model(rng: np.random.Generator, d_max: int = 4):
    """Parameters and a strictly positive distribution drawn inside the model's ranges."""
    masses = rng.dirichlet(np.ones(d_max))
    params = ModelParams(
        alpha=rng.uniform(0.1, 0.9),
        beta_P=rng.uniform(0.05, 0.9, size=d_max),
        beta_U=rng.uniform(0.05, 0.9, size=d_max),
        gamma=rng.uniform(0.2, 0.9),
        L=rng.uniform(5.0, 30.0),
        c_P=rng.uniform(0.5, 20.0),
    )
    return params, DegreeDistribution(masses=masses)


@pytest.fixture
def uniform4():
    return make_distribution("uniform", 4)


@pytest.fixture
def params10():
    return table1_params(10.0)


@pytest.fixture
def params8():
    return table1_params(8.0)
