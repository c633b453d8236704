import numpy as np
import pytest

from mhs_slab import spectral_core as sc
from mhs_slab.boundary_data import BoundaryData
from mhs_slab.config import SolverConfig
from mhs_slab.fixed_point import solve
from mhs_slab.spectral_core import SlabGrid3, TorusGrid2


def slab(n=16, nz=32, L=1.0):
    return SlabGrid3(TorusGrid2(n, n), nz, L)


def smooth_b(grid, amp):
    """Smooth z-dependent perturbation with max norm ``amp``."""
    x, y = grid.base.mesh
    Z = grid.z[:, None, None]
    b = np.stack(
        [
            np.sin(y + 0.3) * (1 + Z),
            np.cos(x - y) * np.cos(Z),
            np.sin(x) * Z * np.cos(y) + 0.3 * np.cos(2 * x + y),
        ]
    )
    return b * (amp / np.abs(b).max())


def solenoidal_b(grid, amp):
    """Divergence-free perturbation ``curl(z^3 a)`` with max norm ``amp``."""
    x, y = grid.base.mesh
    Z = grid.z[:, None, None]
    a = [np.sin(x + 2 * y) + 0.5 * np.cos(y), np.cos(2 * x - y) + 0.3 * np.sin(x), np.sin(x) * np.cos(y)]
    b = np.stack(
        [
            Z**3 * sc.dy(a[2]) - 3 * Z**2 * a[1],
            3 * Z**2 * a[0] - Z**3 * sc.dx(a[2]),
            Z**3 * (sc.dx(a[1]) - sc.dy(a[0])),
        ]
    )
    return b * (amp / np.abs(b).max())


def solenoidal_j0(grid):
    x, y = grid.mesh
    psi = np.sin(x + y) + 0.5 * np.cos(2 * x - y)
    return np.stack([sc.dy(psi), -sc.dx(psi), np.cos(x) - 0.5 * np.sin(2 * y + x)])


def cosine_data(grid, eps):
    """``f = eps cos x`` on both faces, ``g = eps (sin y, sin x)``."""
    x, y = grid.mesh
    f = eps * np.cos(x)
    return BoundaryData(f, f.copy(), eps * np.stack([np.sin(y), np.sin(x)]))


def rich_data(grid, eps):
    """Band-limited data with unequal faces, nonzero means and mixed modes."""
    x, y = grid.mesh
    fm = eps * (np.cos(x) + 0.5 * np.sin(x + 2 * y) + 0.3)
    fp = eps * (0.7 * np.sin(y) - 0.4 * np.cos(2 * x - y) + 0.3)
    g = eps * np.stack([np.sin(y) + 0.2 * np.cos(x - y) + 0.1, np.sin(x) + 0.3 * np.cos(2 * y) - 0.05])
    return BoundaryData(fm, fp, g)


@pytest.fixture(scope="session")
def config():
    return SolverConfig()


@pytest.fixture(scope="session")
def rich_solution(config):
    data = rich_data(config.torus, 1e-3)
    return data, solve(data, config)


@pytest.fixture(scope="session")
def cosine_solutions(config):
    out = {}
    for eps in (1e-4, 1e-3):
        data = cosine_data(config.torus, eps)
        out[eps] = (data, solve(data, config, check=False))
    return out
