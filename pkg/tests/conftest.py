import numpy as np
import pytest

from robust_treat.model import (
    IdentifiedBounds,
    make_evidence_aggregation,
    make_problem,
    make_stoye,
)


@pytest.fixture
def stoye_case1():
    return make_stoye(1.0, 1.0, 0.5)


@pytest.fixture
def stoye_case2():
    return make_stoye(1.0, 1.0, 10.0)


@pytest.fixture
def evidence_case1():
    return make_evidence_aggregation([0.0], [([0.5], 1.0), ([-0.5], 1.0)], 1.0, [0.3, -0.1])


@pytest.fixture
def evidence_case2():
    return make_evidence_aggregation([0.0], [([0.5], 1.0), ([-0.5], 1.0)], 3.0, [0.3, -0.1])


def shifted_first_coordinate(k: float):
    """Bounds [mu_1 - k, mu_1 + k]: a two-dimensional signal where only the first coordinate matters."""

    def bounds(mu):
        return IdentifiedBounds(float(mu[0]) - k, float(mu[0]) + k)

    return bounds


@pytest.fixture
def plane_case2():
    # Sigma = I, mu_bar = (1, 0), bounds at mu_bar = (-9, 11)
    return make_problem(np.eye(2), [1.0, 0.0], shifted_first_coordinate(10.0), label="plane")
