"""Div-curl problem on the slab: ``curl W = j``, ``div W = 0``, ``W.n = f``.

``W`` is built as ``curl Z + <f> e3 + A1 e1 + A2 e2``.  For each Fourier mode
the horizontal potentials solve ``(-d^2/dz^2 + |xi|^2) Z_l = j_l`` with the
surface potentials ``h_l`` as Dirichlet data, evaluated by product
integration against the slab Green's function.  ``Z3`` is fixed by the third
component of the curl relation with ``Z3 = 0`` on the mean mode, and the curl
is taken analytically per mode, so no finite differences enter ``W``.

The constants ``A1, A2`` carry the two harmonic degrees of freedom; they are
set so that the fluxes of ``W`` through the planes ``x = 0`` and ``y = 0``
equal the prescribed values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral_core as sc
from . import zgrid
from .boundary_data import BoundaryData, DerivedBoundary, derive
from .errors import CompatibilityViolation, SliceMeanViolation
from .spectral_core import TWO_PI, SlabGrid3, TorusGrid2


@dataclass(frozen=True)
class Fluxes:
    """Fluxes of the field through the planes ``x = 0`` (J1) and ``y = 0`` (J2)."""

    J1: float = 0.0
    J2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.J1) and np.isfinite(self.J2)):
            raise ValueError("fluxes must be finite")


@dataclass
class VectorPotential:
    """Potential ``Z`` together with the analytic z-derivatives of ``Z1, Z2``.

    The spectral arrays are kept so the curl can be formed without
    re-transforming.
    """

    grid: SlabGrid3
    Z_hat: np.ndarray  # (3, nz+1, nx, ny) complex
    dZ_hat: np.ndarray  # (2, nz+1, nx, ny) complex

    @property
    def Z(self) -> np.ndarray:
        return sc.from_spectral(self.Z_hat)


class ModeGroups:
    """Partition of the kept modes of a torus grid by ``|xi|``.

    The z-operators depend on a mode only through ``|xi|``, so they are built
    once per distinct magnitude.
    """

    def __init__(self, grid: TorusGrid2):
        k = np.round(grid.kabs, 12)
        keep = grid.keep
        self.values, inverse = np.unique(k[keep], return_inverse=True)
        self.index = np.full(grid.shape, -1)
        self.index[keep] = inverse
        flat = self.index.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(self.values.size + 1))
        self.members = [order[bounds[a] : bounds[a + 1]] for a in range(self.values.size)]


_GROUPS: dict[tuple[int, int], ModeGroups] = {}


def mode_groups(grid: TorusGrid2) -> ModeGroups:
    key = grid.shape
    if key not in _GROUPS:
        _GROUPS[key] = ModeGroups(grid)
    return _GROUPS[key]


def quadrature_for(grid: SlabGrid3, sub: int = 2) -> tuple[ModeGroups, zgrid.SlabQuadrature]:
    groups = mode_groups(grid.base)
    quad = zgrid.slab_quadrature(grid.n_z + 1, grid.L, groups.values, sub)
    return groups, quad


def apply_per_k(matrices: np.ndarray, coeffs: np.ndarray, grid: SlabGrid3, sub: int = 2) -> np.ndarray:
    """Apply the per-|xi| z-matrices ``matrices[a]`` to ``coeffs (..., nz+1, nx, ny)``.

    ``matrices`` has shape ``(K, R, nz+1)``; the result has ``R`` rows in
    place of the z axis.  Dropped (Nyquist) modes stay zero.
    """
    groups = mode_groups(grid.base)
    lead = coeffs.shape[:-3]
    nzp = coeffs.shape[-3]
    flat = coeffs.reshape(lead + (nzp, -1))
    rows = matrices.shape[1]
    out = np.zeros(lead + (rows, flat.shape[-1]), dtype=complex)
    for a, idx in enumerate(groups.members):
        out[..., idx] = np.matmul(matrices[a], flat[..., idx])
    return out.reshape(lead + (rows,) + grid.base.shape)


def profiles_per_mode(quad: zgrid.SlabQuadrature, grid: SlabGrid3) -> tuple[np.ndarray, ...]:
    """The four harmonic z-profiles broadcast to ``(nz+1, nx, ny)``."""
    groups = mode_groups(grid.base)
    idx = np.where(groups.index >= 0, groups.index, 0)
    out = []
    for prof in (quad.lower, quad.upper, quad.d_lower, quad.d_upper):
        arr = np.moveaxis(prof[idx], -1, 0) * grid.base.keep
        out.append(arr)
    return tuple(out)


def solve_vector_potential(
    j: np.ndarray,
    derived: DerivedBoundary,
    grid: SlabGrid3,
    n_quad_z: int = 2,
    mean_tol: float = 1e-8,
) -> VectorPotential:
    """Potential ``Z`` with ``curl curl Z = j`` and the surface potentials as face data."""
    base = grid.base
    if j.shape != (3,) + grid.shape:
        raise ValueError(f"j must have shape {(3,) + grid.shape}, got {j.shape}")
    scale = max(1.0, float(np.max(np.abs(j), initial=0.0)))
    drift = float(np.max(np.abs(sc.mean(j[2])), initial=0.0))
    if drift > mean_tol * scale:
        raise SliceMeanViolation(f"slice mean of j3 reaches {drift:.3e}")
    _, quad = quadrature_for(grid, n_quad_z)
    jh = sc.to_spectral(j) * base.keep
    lower, upper, d_lower, d_upper = profiles_per_mode(quad, grid)
    h = [
        (sc.to_spectral(derived.h1_minus), sc.to_spectral(derived.h1_plus)),
        (sc.to_spectral(derived.h2_minus), sc.to_spectral(derived.h2_plus)),
    ]
    Zh = np.zeros((3,) + grid.shape, dtype=complex)
    dZh = np.zeros((2,) + grid.shape, dtype=complex)
    Zh[:2] = apply_per_k(quad.G, jh[:2], grid)
    dZh[:] = apply_per_k(quad.D, jh[:2], grid)
    for l in range(2):
        hm, hp = h[l]
        Zh[l] += hm * lower + hp * upper
        dZh[l] += hm * d_lower + hp * d_upper
    inv_k2 = np.zeros(base.shape)
    np.divide(1.0, base.kabs**2, out=inv_k2, where=base.nonzero)
    inv_k2 = inv_k2 * base.keep
    Zh[2] = (jh[2] - 1j * base.m * dZh[0] - 1j * base.n * dZh[1]) * inv_k2
    return VectorPotential(grid=grid, Z_hat=Zh, dZ_hat=dZh)


def curl_potential(pot: VectorPotential) -> np.ndarray:
    """``curl Z`` from the spectral potential (mode-wise, exact in z)."""
    base = pot.grid.base
    Zh, dZh = pot.Z_hat, pot.dZ_hat
    im, in_ = 1j * base.m, 1j * base.n
    Wh = np.stack(
        [
            in_ * Zh[2] - dZh[1],
            dZh[0] - im * Zh[2],
            im * Zh[1] - in_ * Zh[0],
        ]
    )
    return sc.from_spectral(Wh * base.keep)


def assemble_field(curlZ: np.ndarray, f_mean: float, harmonic: tuple[float, float]) -> np.ndarray:
    """``W = curl Z + A1 e1 + A2 e2 + <f> e3``."""
    W = np.array(curlZ, dtype=float, copy=True)
    W[0] += harmonic[0]
    W[1] += harmonic[1]
    W[2] += f_mean
    return W


def plane_fluxes(W: np.ndarray, grid: SlabGrid3, n_quad_z: int = 2) -> Fluxes:
    """Fluxes of ``W`` through ``x = 0`` and ``y = 0``.

    The in-plane horizontal integral is the trapezoid rule (exact for
    trigonometric polynomials); the z integral uses the slab quadrature.
    """
    _, quad = quadrature_for(grid, n_quad_z)
    w = quad.weights
    J1 = TWO_PI * float(w @ W[0][:, 0, :].mean(axis=-1))
    J2 = TWO_PI * float(w @ W[1][:, :, 0].mean(axis=-1))
    return Fluxes(J1, J2)


def harmonic_for_fluxes(curlZ: np.ndarray, flux: Fluxes, grid: SlabGrid3, n_quad_z: int = 2):
    """Constants ``(A1, A2)`` giving ``curl Z + A`` the prescribed plane fluxes."""
    base = plane_fluxes(curlZ, grid, n_quad_z)
    span = TWO_PI * grid.L
    return (flux.J1 - base.J1) / span, (flux.J2 - base.J2) / span


def check_compatibility(j: np.ndarray, data: BoundaryData, tol: float = 1e-10):
    gap = abs(float(sc.mean(data.f_minus) - sc.mean(data.f_plus)))
    if gap > tol:
        raise CompatibilityViolation(f"face means of f differ by {gap:.3e}")
    inflow = abs(float(sc.mean(j[2, 0])))
    if inflow > tol * max(1.0, float(np.max(np.abs(j[2, 0]), initial=0.0))):
        raise CompatibilityViolation(f"inflow mean of j3 is {inflow:.3e}")


def divcurl_solve(
    j: np.ndarray,
    data: BoundaryData | DerivedBoundary,
    flux: Fluxes,
    grid: SlabGrid3,
    n_quad_z: int = 2,
    mean_tol: float = 1e-8,
) -> np.ndarray:
    """Field ``W`` with ``curl W = j``, ``div W = 0``, ``W3 = f`` on both faces and plane fluxes ``flux``."""
    if isinstance(data, BoundaryData):
        check_compatibility(j, data)
        derived = derive(data, grid.L)
    else:
        derived = data
    pot = solve_vector_potential(j, derived, grid, n_quad_z, mean_tol)
    cz = curl_potential(pot)
    A = harmonic_for_fluxes(cz, flux, grid, n_quad_z)
    return assemble_field(cz, derived.f_mean, A)


# -- residual diagnostics ------------------------------------------------------


def curl(W: np.ndarray, L: float) -> np.ndarray:
    """Spectral in (x, y), eighth-order finite differences in z."""
    d3 = zgrid.dz(W, L, axis=1)
    return np.stack(
        [
            sc.dy(W[2]) - d3[1],
            d3[0] - sc.dx(W[2]),
            sc.dx(W[1]) - sc.dy(W[0]),
        ]
    )


def divergence(W: np.ndarray, L: float) -> np.ndarray:
    return sc.dx(W[0]) + sc.dy(W[1]) + zgrid.dz(W[2], L, axis=0)


def residuals(W: np.ndarray, j: np.ndarray, f_minus: np.ndarray, f_plus: np.ndarray, L: float) -> dict:
    return {
        "curl": float(np.max(np.abs(curl(W, L) - j))),
        "div": float(np.max(np.abs(divergence(W, L)))),
        "normal_minus": float(np.max(np.abs(W[2, 0] - f_minus))),
        "normal_plus": float(np.max(np.abs(W[2, -1] - f_plus))),
    }
