import numpy as np
import pytest

from g2sym import fhn_structure as fhn


@pytest.fixture(scope="session")
def bs_solution():
    return fhn.bryant_salamon_solution(c=1.0, r_max=5.0)


@pytest.fixture(scope="session")
def delta_solution():
    params = fhn.FHNParams(c1=1.0, c2=-1.0, diagram="Delta_SU2")
    return fhn.solve_from_singular_orbit(params, t_end=3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)
