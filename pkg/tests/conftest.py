import numpy as np
import pytest

from smfg import CurveTableParams, make_curve_table


@pytest.fixture(scope="session")
def two_action_op():
    """The analytic 2-action game F(mu) = (0.8 - mu(1), 0.6 - mu(2)); its
    regularized equilibrium is (0.5 + 0.1/(1+tau), ...) by indifference."""
    return make_curve_table(CurveTableParams(curves=(
        np.array([[0.0, 0.8], [1.0, -0.2]]),
        np.array([[0.0, 0.6], [1.0, -0.4]]),
    )))


def brute_force_project(v, mesh=1000):
    """Grid minimizer of ||x - v|| over the K=3 simplex with spacing 1/mesh."""
    v = np.asarray(v, dtype=np.float64)
    assert v.size == 3
    grid = simplex_grid_3(mesh)
    d = np.einsum("ij,ij->i", grid - v, grid - v)
    return grid[int(d.argmin())]


_GRID_CACHE = {}


def simplex_grid_3(mesh=1000):
    if mesh not in _GRID_CACHE:
        i, j = np.meshgrid(np.arange(mesh + 1), np.arange(mesh + 1), indexing="ij")
        keep = (i + j) <= mesh
        i, j = i[keep], j[keep]
        grid = np.stack([i, j, mesh - i - j], axis=1) / mesh
        _GRID_CACHE[mesh] = grid
    return _GRID_CACHE[mesh]
