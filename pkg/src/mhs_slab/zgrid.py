"""Quadrature, interpolation and differentiation along the slab height.

All z-operators act on uniform node sets ``z_0 = 0 < ... < z_N = L`` and are
represented as small dense matrices.  Integrals against the slab Green's
function use product integration: the sampled source is replaced by a
piecewise degree-5 Lagrange interpolant and the kernel is integrated exactly
(to Gauss-Legendre accuracy) against it, so z-independent and low-degree
polynomial sources are handled without discretization error.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

PANEL_DEGREE = 5
FD_ORDER = 8


def fornberg_weights(x0: float, xs: np.ndarray, max_deriv: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..max_deriv`` at ``x0``."""
    xs = np.asarray(xs, dtype=float)
    npts = xs.size
    c = np.zeros((max_deriv + 1, npts))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, max_deriv)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _stencil_start(center: int, width: int, npts: int) -> int:
    return int(min(max(0, center), npts - width))


def interp_matrix(zq: np.ndarray, z: np.ndarray, degree: int) -> np.ndarray:
    """Rows of local Lagrange weights evaluating node data at points ``zq``."""
    zq = np.atleast_1d(np.asarray(zq, dtype=float))
    npts = z.size
    width = min(degree + 1, npts)
    h = z[1] - z[0]
    out = np.zeros((zq.size, npts))
    for r, q in enumerate(zq):
        j = int(np.clip(np.floor((q - z[0]) / h), 0, npts - 2))
        start = _stencil_start(j - (width - 1) // 2, width, npts)
        idx = np.arange(start, start + width)
        out[r, idx] = fornberg_weights(q, z[idx], 0)[0]
    return out


@lru_cache(maxsize=32)
def _diff_matrix_cached(npts: int, L: float, order: int) -> np.ndarray:
    z = np.linspace(0.0, L, npts)
    width = min(order + 1, npts)
    D = np.zeros((npts, npts))
    for i in range(npts):
        start = _stencil_start(i - (width - 1) // 2, width, npts)
        idx = np.arange(start, start + width)
        D[i, idx] = fornberg_weights(z[i], z[idx], 1)[1]
    D.setflags(write=False)
    return D


def diff_matrix(npts: int, L: float, order: int = FD_ORDER) -> np.ndarray:
    """Dense first-derivative matrix of the given formal order."""
    return _diff_matrix_cached(int(npts), float(L), int(order))


def dz(values: np.ndarray, L: float, axis: int = 0, order: int = FD_ORDER) -> np.ndarray:
    """High-order finite-difference z-derivative along ``axis``."""
    D = diff_matrix(values.shape[axis], L, order)
    moved = np.moveaxis(values, axis, 0)
    out = np.tensordot(D, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def _panel_rules(z: np.ndarray, sub: int, nq: int = 6):
    """Gauss points, weights and local Lagrange bases for every interval.

    Returns ``pts (N, Q)``, ``wts (N, Q)``, ``basis (N, Q, p+1)`` and the
    stencil column indices ``cols (N, p+1)``.
    """
    npts = z.size
    nint = npts - 1
    width = min(PANEL_DEGREE + 1, npts)
    gx, gw = np.polynomial.legendre.leggauss(nq)
    pts, wts, basis, cols = [], [], [], []
    for j in range(nint):
        a, b = z[j], z[j + 1]
        edges = np.linspace(a, b, sub + 1)
        p = np.concatenate(
            [0.5 * (e1 - e0) * gx + 0.5 * (e1 + e0) for e0, e1 in zip(edges, edges[1:])]
        )
        w = np.concatenate([0.5 * (e1 - e0) * gw for e0, e1 in zip(edges, edges[1:])])
        start = _stencil_start(j - (width - 2) // 2, width, npts)
        idx = np.arange(start, start + width)
        B = np.stack([fornberg_weights(q, z[idx], 0)[0] for q in p])
        pts.append(p)
        wts.append(w)
        basis.append(B)
        cols.append(idx)
    return np.array(pts), np.array(wts), np.array(basis), np.array(cols)


def _scatter(vals: np.ndarray, cols: np.ndarray, npts: int) -> np.ndarray:
    """Sum ``vals[i, j, r]`` into columns ``cols[j, r]``."""
    out = np.zeros((vals.shape[0], npts))
    for j in range(cols.shape[0]):
        out[:, cols[j]] += vals[:, j, :]
    return out


def green_profiles(k: float, z: np.ndarray, z0: np.ndarray, L: float):
    """Green's function ``g`` of ``-d^2/dz^2 + k^2`` with Dirichlet ends and ``dg/dz``.

    Overflow-safe forms with non-positive exponents; ``k = 0`` uses the
    polynomial limits.
    """
    z, z0 = np.broadcast_arrays(np.asarray(z, float), np.asarray(z0, float))
    lo = np.minimum(z, z0)
    hi = np.maximum(z, z0)
    below = z <= z0
    if k == 0:
        g = lo * (L - hi) / L
        dg = np.where(below, (L - z0) / L, -z0 / L)
        return g, dg
    den = -np.expm1(-2 * k * L)
    g = (
        np.exp(-k * (hi - lo))
        * (-np.expm1(-2 * k * lo))
        * (-np.expm1(-2 * k * (L - hi)))
        / (2 * k * den)
    )
    d_below = (
        0.5 * np.exp(-k * np.abs(z0 - z)) * (1 + np.exp(-2 * k * z)) * (-np.expm1(-2 * k * (L - z0)))
    ) / den
    d_above = (
        -0.5 * np.exp(-k * np.abs(z - z0)) * (-np.expm1(-2 * k * z0)) * (1 + np.exp(-2 * k * (L - z)))
    ) / den
    dg = np.where(below, d_below, d_above)
    return g, dg


def boundary_profiles(k: float, z: np.ndarray, L: float):
    """Harmonic profiles ``sinh(k(L-z))/sinh(kL)``, ``sinh(kz)/sinh(kL)`` and z-derivatives."""
    z = np.asarray(z, float)
    if k == 0:
        one = np.ones_like(z)
        return (L - z) / L, z / L, -one / L, one / L
    den = -np.expm1(-2 * k * L)
    lower = np.exp(-k * z) * (-np.expm1(-2 * k * (L - z))) / den
    upper = np.exp(-k * (L - z)) * (-np.expm1(-2 * k * z)) / den
    d_lower = -k * np.exp(-k * z) * (1 + np.exp(-2 * k * (L - z))) / den
    d_upper = k * np.exp(-k * (L - z)) * (1 + np.exp(-2 * k * z)) / den
    return lower, upper, d_lower, d_upper


class SlabQuadrature:
    """Product-integration operators for one z-grid and a set of |xi| values.

    For each distinct wavenumber magnitude ``k`` it stores matrices ``G_k``
    and ``D_k`` with ``(G_k s)_i = int g_k(z_i, z0) s(z0) dz0`` and ``D_k``
    the same for ``dg_k/dz``, where ``s`` is the piecewise Lagrange
    interpolant of the node samples.
    """

    def __init__(self, z: np.ndarray, L: float, kvalues: np.ndarray, sub: int = 2):
        self.z = np.asarray(z, float)
        self.L = float(L)
        self.k = np.asarray(kvalues, float)
        npts = self.z.size
        pts, wts, basis, cols = _panel_rules(self.z, sub)
        self._rules = (pts, wts, basis, cols)
        wb = wts[:, :, None] * basis  # (N, Q, p+1)
        steps = np.zeros((npts - 1, npts))
        for j in range(npts - 1):
            steps[j, cols[j]] += wb[j].sum(axis=0)
        cum = np.vstack([np.zeros(npts), np.cumsum(steps, axis=0)])
        self.cumulative = cum
        self.weights = cum[-1].copy()
        G = np.empty((self.k.size, npts, npts))
        D = np.empty((self.k.size, npts, npts))
        zi = self.z[:, None, None]
        for a, k in enumerate(self.k):
            g, dg = green_profiles(k, zi, pts[None], self.L)
            G[a] = _scatter(np.einsum("ijq,jqr->ijr", g, wb), cols, npts)
            D[a] = _scatter(np.einsum("ijq,jqr->ijr", dg, wb), cols, npts)
        self.G = G
        self.D = D
        prof = np.array([boundary_profiles(k, self.z, self.L) for k in self.k])
        self.lower, self.upper, self.d_lower, self.d_upper = (prof[:, c] for c in range(4))

    @property
    def bottom_flux_row(self) -> np.ndarray:
        """Rows of ``D_k`` at ``z = 0``: weights of the operator A per k."""
        return self.D[:, 0, :]


@lru_cache(maxsize=8)
def _slab_quadrature_cached(npts: int, L: float, kvalues: tuple, sub: int) -> SlabQuadrature:
    return SlabQuadrature(np.linspace(0.0, L, npts), L, np.array(kvalues), sub)


def slab_quadrature(npts: int, L: float, kvalues: np.ndarray, sub: int = 2) -> SlabQuadrature:
    return _slab_quadrature_cached(int(npts), float(L), tuple(np.round(kvalues, 12)), int(sub))
