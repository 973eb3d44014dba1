import numpy as np
import pytest

from biot_majorant.majorant import friedrichs_constant
from biot_majorant.mesh import unit_rectangle_mesh
from biot_majorant.reconstruction import flux_nodal_average
from biot_majorant.solvers import solve_double_diffusion
from biot_majorant.verification import manufactured_case

C_F_UNIT = friedrichs_constant(1.0, 1.0)


@pytest.fixture(scope="session")
def ms1():
    return manufactured_case("MS1")


@pytest.fixture(scope="session")
def ms2():
    return manufactured_case("MS2")


@pytest.fixture(scope="session")
def ms1_n8(ms1):
    """Discrete MS1 solution and averaged flux on the n=8 mesh."""
    m = unit_rectangle_mesh(1.0, 1.0, 8)
    q = solve_double_diffusion(m, ms1.params, ms1.loads)
    return m, q, flux_nodal_average(q, ms1.params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
