import pytest

from kinetics import make_params
from simulator import Grid


@pytest.fixture
def turing_params():
    """(a, b) = (0.1, 0.9) on L_x = 1, L_y = 0.2: diffusion-driven unstable."""
    return make_params(a=0.1, b=0.9, d_u=0.01, d_v=0.2, L_x=1.0, L_y=0.2, tau=0.0)


@pytest.fixture
def stable_params():
    """(a, b) = (0.4, 0.4) on L_x = 3, L_y = 0.2: no pattern."""
    return make_params(a=0.4, b=0.4, d_u=0.01, d_v=0.2, L_x=3.0, L_y=0.2, tau=0.0)


@pytest.fixture
def small_grid():
    return Grid(n=21, m=5)
