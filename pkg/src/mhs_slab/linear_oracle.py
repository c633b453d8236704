"""Closed-form solution of the problem linearized about ``B = e3``.

At linear order the current is constant along vertical lines, so every
Fourier mode of the vector potential has an explicit sinh/cosh profile.  This
module deliberately shares nothing with the nonlinear pipeline except numpy's
FFT: surface potentials, face traces, multipliers and profiles are all
re-derived here so that agreement with the pipeline is a real cross-check.

Coefficients here use the plain ``numpy.fft.fft2`` normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divcurl import Fluxes


@dataclass
class LinearSolution:
    j0: np.ndarray  # (3, nx, ny)
    Z: np.ndarray  # (3, nz+1, nx, ny)
    B: np.ndarray  # (3, nz+1, nx, ny), includes the unit vertical field
    flux: Fluxes
    z: np.ndarray


class _Modes:
    def __init__(self, nx: int, ny: int, L: float):
        self.nx, self.ny, self.L = nx, ny, L
        self.m = np.fft.fftfreq(nx, 1.0 / nx)[:, None]
        self.n = np.fft.fftfreq(ny, 1.0 / ny)[None, :]
        self.live = (np.abs(self.m) < nx // 2) & (np.abs(self.n) < ny // 2)
        self.k2 = self.m**2 + self.n**2
        self.k = np.sqrt(self.k2)
        self.zero = self.k2 == 0
        self.safe_k = np.where(self.zero, 1.0, self.k)
        self.safe_k2 = np.where(self.zero, 1.0, self.k2)

    def fft(self, v):
        return np.fft.fft2(v, axes=(-2, -1)) * self.live

    def ifft(self, c):
        return np.fft.ifft2(c, axes=(-2, -1)).real

    def multiplier(self):
        """``(cosh kL - 1) / (k sinh kL)``, ``L/2`` at the origin."""
        k, L = self.safe_k, self.L
        return np.where(self.zero, L / 2, (np.cosh(k * L) - 1) / (k * np.sinh(k * L)))


def _surface_potentials(f: np.ndarray, md: _Modes):
    """``(h1, h2)`` with ``d1 h2 - d2 h1 = f - <f>``, ``h2(0, y) = h1(0, y) = 0``, ``h1(x, 0) = 0``."""
    c = md.fft(f)
    cx = np.where(md.m != 0, c / np.where(md.m != 0, 1j * md.m, 1.0), 0.0)
    h2 = md.ifft(cx)
    h2 = h2 - h2[0:1, :]
    col = f.mean(axis=0) - f.mean()
    cy = np.fft.fft(col)
    ny1 = md.n[0]
    cy = np.where((ny1 != 0) & (np.abs(ny1) < md.ny // 2), cy / np.where(ny1 != 0, 1j * ny1, 1.0), 0.0)
    q = np.fft.ifft(cy).real
    h1 = -np.broadcast_to(q - q[0], f.shape)
    return h1, h2


def _face_traces(hm, hp, md: _Modes):
    """Horizontal trace at ``z = 0`` of the curl of the harmonic potential carrying ``h``."""
    k, L = md.safe_k, md.L
    coth = np.where(md.zero, 1 / L, k * np.cosh(k * L) / np.sinh(k * L))
    csch = np.where(md.zero, 1 / L, k / np.sinh(k * L))
    a = [md.fft(v) for v in (hm[0], hp[0], hm[1], hp[1])]  # h1-, h1+, h2-, h2+
    dZ1 = -a[0] * coth + a[1] * csch
    dZ2 = -a[2] * coth + a[3] * csch
    k2 = md.safe_k2
    Z3 = np.where(md.zero, 0, (-1j * md.m * dZ1 - 1j * md.n * dZ2) / k2)
    W1 = 1j * md.n * Z3 - dZ2
    W2 = dZ1 - 1j * md.m * Z3
    return W1, W2


def reduced_data(f_minus, f_plus, g, L: float):
    """``G_l = (g_l - trace_l) / multiplier`` in coefficient form, and ``j0_3``."""
    md = _Modes(*f_minus.shape, L)
    hm = _surface_potentials(f_minus, md)
    hp = _surface_potentials(f_plus, md)
    t1, t2 = _face_traces(hm, hp, md)
    mult = md.multiplier()
    G1 = (md.fft(g[0]) - t1) / mult
    G2 = (md.fft(g[1]) - t2) / mult
    j3 = md.ifft(1j * md.m * md.fft(g[1]) - 1j * md.n * md.fft(g[0]))
    return md, hm, hp, G1, G2, j3


def linear_fluxes(f_minus, f_plus, g, L: float) -> Fluxes:
    """Plane fluxes ``J1 = pi L^2 <G1>`` through ``x = 0`` and ``J2 = pi L^2 <G2>`` through ``y = 0``."""
    md, _, _, G1, G2, _ = reduced_data(f_minus, f_plus, g, L)
    P = md.nx * md.ny
    return Fluxes(J1=float(np.pi * L**2 * G1[0, 0].real / P), J2=float(np.pi * L**2 * G2[0, 0].real / P))


def linear_j0(f_minus, f_plus, g, L: float, flux: Fluxes | None = None) -> np.ndarray:
    """Inflow current ``(j0_1, j0_2, j0_3)`` of the linear problem."""
    md, _, _, G1, G2, j3 = reduced_data(f_minus, f_plus, g, L)
    flux = flux or linear_fluxes(f_minus, f_plus, g, L)
    k2 = md.safe_k2
    mn = md.m * md.n / k2
    u1 = np.where(md.zero, 0, mn * G1 - (md.m**2 / k2) * G2 + G2)
    u2 = np.where(md.zero, 0, (md.n**2 / k2 - 1) * G1 - mn * G2)
    P = md.nx * md.ny
    u1[0, 0] = P * (G2[0, 0].real / P - flux.J2 / (np.pi * L**2))
    u2[0, 0] = P * (-G1[0, 0].real / P + flux.J1 / (np.pi * L**2))
    return np.stack([md.ifft(u1), md.ifft(u2), j3])


def _profiles(md: _Modes, z: np.ndarray):
    """Closed-form z-profiles for each mode, shape ``(nz+1, nx, ny)``."""
    k, L = md.safe_k[None], md.L
    zz = z[:, None, None]
    sh = np.sinh(k * L)
    lower = np.where(md.zero, (L - zz) / L, np.sinh(k * (L - zz)) / sh)
    upper = np.where(md.zero, zz / L, np.sinh(k * zz) / sh)
    d_lower = np.where(md.zero, -1 / L, -k * np.cosh(k * (L - zz)) / sh)
    d_upper = np.where(md.zero, 1 / L, k * np.cosh(k * zz) / sh)
    # response to a unit z-independent source with zero end values
    bubble = np.where(
        md.zero, zz * (L - zz) / 2, (sh - np.sinh(k * zz) - np.sinh(k * (L - zz))) / (k**2 * sh)
    )
    d_bubble = np.where(md.zero, L / 2 - zz, (np.cosh(k * (L - zz)) - np.cosh(k * zz)) / (k * sh))
    return lower, upper, d_lower, d_upper, bubble, d_bubble


def linear_field(f_minus, f_plus, g, L: float, n_z: int, j0: np.ndarray | None = None,
                 flux: Fluxes | None = None) -> LinearSolution:
    """Potential and field of the linear problem on ``n_z + 1`` equispaced levels."""
    md, hm, hp, G1, G2, _ = reduced_data(f_minus, f_plus, g, L)
    flux = flux or linear_fluxes(f_minus, f_plus, g, L)
    if j0 is None:
        j0 = linear_j0(f_minus, f_plus, g, L, flux)
    z = np.linspace(0.0, L, n_z + 1)
    lower, upper, d_lower, d_upper, bubble, d_bubble = _profiles(md, z)
    jh = [md.fft(c) for c in j0]
    h = [(md.fft(hm[l]), md.fft(hp[l])) for l in range(2)]
    Z = []
    dZ = []
    for l in range(2):
        Z.append(jh[l] * bubble + h[l][0] * lower + h[l][1] * upper)
        dZ.append(jh[l] * d_bubble + h[l][0] * d_lower + h[l][1] * d_upper)
    P = md.nx * md.ny
    zz = z[:, None, None]
    Z[0][:, 0, 0] += P * zz[:, 0, 0] * flux.J2 / (2 * np.pi * L)
    dZ[0][:, 0, 0] += P * flux.J2 / (2 * np.pi * L)
    Z[1][:, 0, 0] -= P * zz[:, 0, 0] * flux.J1 / (2 * np.pi * L)
    dZ[1][:, 0, 0] -= P * flux.J1 / (2 * np.pi * L)
    Z3 = np.where(md.zero, 0, (jh[2] - 1j * md.m * dZ[0] - 1j * md.n * dZ[1]) / md.safe_k2)
    B = np.stack(
        [
            md.ifft(1j * md.n * Z3 - dZ[1]),
            md.ifft(dZ[0] - 1j * md.m * Z3),
            md.ifft(1j * md.m * Z[1] - 1j * md.n * Z[0]),
        ]
    )
    B[2] += 1.0 + f_minus.mean()
    Zr = np.stack([md.ifft(Z[0]), md.ifft(Z[1]), md.ifft(Z3)])
    return LinearSolution(j0=j0, Z=Zr, B=B, flux=flux, z=z)
