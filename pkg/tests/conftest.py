import numpy as np
import pytest

from wavehom.core_types import (make_constant_medium, make_cosine_medium_1d,
                                make_gaussian_datum,
                                make_smoothed_square_medium_2d)
from wavehom.dispersion import decompose, fit_dispersion


@pytest.fixture(scope="session")
def cosine_medium():
    return make_cosine_medium_1d(1.5, 1.4)


@pytest.fixture(scope="session")
def constant_medium_1d():
    return make_constant_medium(1.0, 1)


@pytest.fixture(scope="session")
def square_medium_2d():
    return make_smoothed_square_medium_2d()


@pytest.fixture(scope="session")
def gaussian_datum():
    return make_gaussian_datum(0.4, 1)


@pytest.fixture(scope="session")
def coeffs_1d(cosine_medium):
    return fit_dispersion(cosine_medium)


@pytest.fixture(scope="session")
def tensors_1d(coeffs_1d):
    return decompose(coeffs_1d)


@pytest.fixture(scope="session")
def coeffs_2d(square_medium_2d):
    # a few dense 2401x2401 eigensolves; shared across the suite
    return fit_dispersion(square_medium_2d)


def rng(seed=0):
    return np.random.default_rng(seed)
