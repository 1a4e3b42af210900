import numpy as np
import pytest

from phenokinetics import Mollifier, MollifiedConstantRate


@pytest.fixture(scope="session")
def wide_plateau_unit_rate():
    """r identically 1 on a plateau wide enough to cover every solution
    support used in the tests; the logistic oracle applies exactly."""
    return MollifiedConstantRate(1.0, Mollifier(12.0, 0.5))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
