import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from nlsdirect.potential import PotentialGrid, TruncationWarning, grid_nodes, tabulate, test2_params as four_soliton_case  # noqa: E402
from nlsdirect.volterra import KernelKind, solve_auxiliary  # noqa: E402


def bump_potential(L, nx, amps, centers, widths, even=False):
    """Sum of Gaussians tapered by (1 - (x/L)^2)^2, so u(+-L) = 0 exactly."""
    x = grid_nodes(L, nx)
    u = np.zeros_like(x)
    for a, c, w in zip(amps, centers, widths):
        u += a * np.exp(-((x - c * L) / (w * L)) ** 2)
    u *= (1.0 - (x / L) ** 2) ** 2
    if even:
        u = 0.5 * (u + u[::-1])
    return PotentialGrid(L, nx, u)


@st.composite
def potentials(draw, nx_min=50, nx_max=200, even=False):
    nx = draw(st.integers(nx_min, nx_max))
    L = draw(st.floats(2.0, 8.0))
    k = draw(st.integers(1, 3))
    amps = draw(st.lists(st.floats(-2.0, 2.0), min_size=k, max_size=k))
    centers = draw(st.lists(st.floats(-0.6, 0.6), min_size=k, max_size=k))
    widths = draw(st.lists(st.floats(0.05, 0.3), min_size=k, max_size=k))
    return bump_potential(L, nx, amps, centers, widths, even)


def quiet_tabulate(model, L, nx):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return tabulate(model, L, nx)


@pytest.fixture(scope="session")
def test2_1200():
    grid = quiet_tabulate(four_soliton_case(), 15.0, 1200)
    return grid, solve_auxiliary(grid, KernelKind.KBAR), solve_auxiliary(grid, KernelKind.M)


@pytest.fixture(scope="session")
def test2_600():
    grid = quiet_tabulate(four_soliton_case(), 15.0, 600)
    return grid, solve_auxiliary(grid, KernelKind.KBAR), solve_auxiliary(grid, KernelKind.M)
