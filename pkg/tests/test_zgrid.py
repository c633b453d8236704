import numpy as np
import pytest

from mhs_slab import zgrid


def test_fornberg_central_second_derivative():
    w = zgrid.fornberg_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
    assert np.allclose(w[2], [1, -2, 1]) and np.allclose(w[1], [-0.5, 0, 0.5])


@pytest.mark.parametrize("deg", range(8))
def test_dz_exact_on_polynomials(deg):
    z = np.linspace(0, 1.7, 33)
    assert np.abs(zgrid.dz(z**deg, 1.7) - deg * z ** max(deg - 1, 0) * (deg > 0)).max() < 1e-9


def test_dz_converges_at_high_order():
    errs = []
    for n in (16, 32):
        z = np.linspace(0, 1, n + 1)
        errs.append(np.abs(zgrid.dz(np.sin(3 * z), 1.0) - 3 * np.cos(3 * z)).max())
    assert errs[0] / errs[1] > 100


def test_interpolation_exact_on_cubics():
    z = np.linspace(0, 1, 9)
    q = np.array([0.03, 0.5, 0.61, 0.99])
    M = zgrid.interp_matrix(q, z, 3)
    assert np.abs(M @ (z**3 - z) - (q**3 - q)).max() < 1e-14


@pytest.mark.parametrize("k", [0.0, 1.0, 4.0])
def test_green_profiles(k):
    """The kernel solves ``-g'' + k^2 g = delta`` with zero ends: check jump and ends."""
    L, z0 = 1.3, np.array(0.4)
    g_lo, d_lo = zgrid.green_profiles(k, np.array(0.4 - 1e-12), z0, L)
    g_hi, d_hi = zgrid.green_profiles(k, np.array(0.4 + 1e-12), z0, L)
    assert float(d_lo - d_hi) == pytest.approx(1.0, abs=1e-9)
    assert float(g_lo) == pytest.approx(float(g_hi), abs=1e-11)
    ends, _ = zgrid.green_profiles(k, np.array([0.0, L]), np.array([0.4, 0.4]), L)
    assert np.abs(ends).max() < 1e-15


def test_overflow_safe():
    g, dg = zgrid.green_profiles(800.0, np.linspace(0, 2, 5), np.full(5, 1.0), 2.0)
    assert np.all(np.isfinite(g)) and np.all(np.isfinite(dg))
    lo, up, dlo, dup = zgrid.boundary_profiles(900.0, np.linspace(0, 2, 5), 2.0)
    assert np.all(np.isfinite(np.stack([lo, up, dlo, dup])))


def test_quadrature_weights_integrate_quintics():
    q = zgrid.slab_quadrature(17, 2.0, np.array([0.0]))
    z = q.z
    assert q.weights @ z**5 == pytest.approx(2.0**6 / 6, rel=1e-13)
    assert np.abs(q.cumulative @ z**2 - z**3 / 3).max() < 1e-13


@pytest.mark.parametrize("k", [0.0, 1.0, 3.0])
def test_green_quadrature_constant_source(k):
    """``-Z'' + k^2 Z = 1`` with zero ends has a closed form."""
    L = 1.0
    q = zgrid.slab_quadrature(33, L, np.array([k]))
    z = q.z
    out = q.G[0] @ np.ones_like(z)
    if k == 0:
        exact = z * (L - z) / 2
    else:
        exact = (np.sinh(k * L) - np.sinh(k * z) - np.sinh(k * (L - z))) / (k**2 * np.sinh(k * L))
    assert np.abs(out - exact).max() < 1e-13
