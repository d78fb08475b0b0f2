import numpy as np
import pytest

from vectorial.control import ControlWeights, fbsm_solve
from vectorial.model import DEFAULT_INITIAL_STATE, get_scenario


@pytest.fixture(params=[1, 2, 3], ids=lambda s: f"scenario{s}")
def preset(request):
    return get_scenario(request.param)


@pytest.fixture
def scenario2():
    return get_scenario(2).params


@pytest.fixture
def rng():
    return np.random.default_rng(20141209)


_SOLVES = {}


def solve_scenario2(gamma_D, gamma_S):
    """Cached forward-backward sweep on scenario 2 with default options."""
    key = (gamma_D, gamma_S)
    if key not in _SOLVES:
        _SOLVES[key] = fbsm_solve(get_scenario(2).params, DEFAULT_INITIAL_STATE, ControlWeights(gamma_D, gamma_S))
    return _SOLVES[key]


@pytest.fixture(scope="session")
def balanced_solution():
    return solve_scenario2(1.0, 1.0)


@pytest.fixture(scope="session")
def human_solution():
    return solve_scenario2(1.0, 0.0)


@pytest.fixture(scope="session")
def economic_solution():
    return solve_scenario2(0.0, 1.0)
