import numpy as np
import pytest

from core.data_io import SyntheticSpec, generate_synthetic
from core.problem import Dataset, Objective, ProblemConstants, compute_constants


@pytest.fixture
def toy():
    return Objective.toy_quadratic()


@pytest.fixture
def toy_constants():
    """Closed-form constants of the toy problem: w* = -1, F* = -1/4, N = 2"""
    return ProblemConstants(L=1.0, mu=0.5, kappa=2.0, N=2.0, w_star=np.array([-1.0]), F_star=-0.25)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(SyntheticSpec(n=200, d=20, s=4, noise=0.05, seed=3))


@pytest.fixture(scope="session")
def small_logistic(small_dataset):
    return Objective.logistic(small_dataset, lam=0.01)


@pytest.fixture(scope="session")
def small_constants(small_logistic):
    return compute_constants(small_logistic, tol=1e-9)


@pytest.fixture
def tiny_dataset():
    """Three samples with supports {0, 2}, {1, 2, 3}, {3}"""
    rows = [([0, 2], [1.0, -2.0]), ([1, 2, 3], [0.5, 1.5, -1.0]), ([3], [2.0])]
    return Dataset.from_rows(rows, [1.0, -1.0, 1.0], 4)
