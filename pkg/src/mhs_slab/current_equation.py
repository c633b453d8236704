"""Integral equation for the horizontal current on the inflow face.

The tangential trace at ``z = 0`` of the div-curl solution depends on the
current only through ``A[j_l]``, the normal derivative at the inflow face of
the Dirichlet solution sourced by ``j_l``.  After transport along the field,
``A[j_l]`` splits into the flat multiplier ``T0`` acting on the inflow value,
four flow kernels ``T_kappa`` from the change of variables along the
characteristics, and ``A`` applied to the non-passive part ``delta j``.
Matching the trace to ``g`` and imposing the divergence constraint at the
inflow face yields

    u = rhs - Upsilon u,     u = (j0_1, j0_2),

which is solved by damped fixed-point (Neumann) iteration.  The mean mode is
fixed separately by the two conditions that make the pressure periodic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import spectral_core as sc
from . import transport, zgrid
from ._accel import kernel_matrices
from .boundary_data import BoundaryData, DerivedBoundary
from .divcurl import (
    Fluxes,
    apply_per_k,
    curl_potential,
    plane_fluxes,
    quadrature_for,
    solve_vector_potential,
)
from .errors import NeumannDivergence
from .spectral_core import AREA, SlabGrid3, TorusGrid2
from .transport import FlowData

log = logging.getLogger(__name__)

LAMBDA_INTERP_DEGREE = 5


@dataclass
class CurrentBoundary:
    j0_1: np.ndarray
    j0_2: np.ndarray
    j0_3: np.ndarray
    iterations: int = 0
    contraction: float = float("nan")

    def as_array(self) -> np.ndarray:
        return np.stack([self.j0_1, self.j0_2, self.j0_3])

    @property
    def horizontal(self) -> np.ndarray:
        return np.stack([self.j0_1, self.j0_2])


# -- the operator A -------------------------------------------------------------


def op_A_hat(theta: np.ndarray, grid: SlabGrid3, n_quad_z: int = 2) -> np.ndarray:
    """Spectral coefficients of ``A[theta]`` for ``theta (..., nz+1, nx, ny)``.

    Per mode ``int_0^L sinh(|xi|(L - z0)) / sinh(|xi| L) theta_hat(xi, z0) dz0``
    by product integration.
    """
    _, quad = quadrature_for(grid, n_quad_z)
    th = sc.to_spectral(theta) * grid.base.keep
    return apply_per_k(quad.D[:, :1, :], th, grid)[..., 0, :, :]


def op_A_apply(theta: np.ndarray, grid: SlabGrid3, n_quad_z: int = 2) -> np.ndarray:
    return sc.from_spectral(op_A_hat(theta, grid, n_quad_z))


# -- flow kernels ---------------------------------------------------------------


@dataclass
class KernelCoeffs:
    """Matrices mapping nodal surface values to spectral coefficients of ``T_kappa``.

    ``mats[kappa - 1][mode, node]`` already includes the Fourier phase and
    the surface quadrature weight, so ``T_kappa u`` has coefficients
    ``mats[kappa - 1] @ u.ravel()``.
    """

    grid: SlabGrid3
    mats: np.ndarray | None  # (4, nx*ny, nx*ny) complex, None for a flat flow
    s: np.ndarray
    ws: np.ndarray

    @property
    def is_flat(self) -> bool:
        return self.mats is None


def gauss_nodes(n_s: int, L: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n_s)
    return 0.5 * L * (x + 1), 0.5 * L * w


def build_kernel_coeffs(flow: FlowData, n_s: int = 32) -> KernelCoeffs:
    """Gauss-Legendre s-quadrature of the four flow kernels for every (mode, node)."""
    grid = flow.grid
    base = grid.base
    s, ws = gauss_nodes(n_s, grid.L)
    if flow.is_flat:
        return KernelCoeffs(grid, None, s, ws)
    I = zgrid.interp_matrix(s, grid.z, LAMBDA_INTERP_DEGREE)
    P = base.size
    lam = np.tensordot(I, flow.Lambda.reshape(2, grid.n_z + 1, P), axes=(1, 1))  # (S, 2, P)
    grad = np.tensordot(I, flow.grad_Lambda.reshape(4, grid.n_z + 1, P), axes=(1, 1))
    theta = transport.jacobian_deviation(np.moveaxis(grad, 1, 0))
    x, y = base.mesh
    mats = kernel_matrices(
        np.broadcast_to(base.m, base.shape).ravel(),
        np.broadcast_to(base.n, base.shape).ravel(),
        base.kabs.ravel(),
        np.ascontiguousarray(lam[:, 0]),
        np.ascontiguousarray(lam[:, 1]),
        np.ascontiguousarray(theta),
        s,
        ws,
        grid.L,
        x.ravel(),
        y.ravel(),
        AREA / P,
    )
    mats *= base.keep.ravel()[None, :, None]
    return KernelCoeffs(grid, mats, s, ws)


def t_kappa_hat(kappa: int, kc: KernelCoeffs, u: np.ndarray) -> np.ndarray:
    """Spectral coefficients of ``T_kappa u`` (without the ``T0`` inverse)."""
    if not 1 <= kappa <= 4:
        raise ValueError("kappa must be 1, 2, 3 or 4")
    base = kc.grid.base
    if kc.is_flat:
        return np.zeros(u.shape, dtype=complex)
    lead = u.shape[:-2]
    flat = u.reshape(lead + (-1,))
    out = np.einsum("mp,...p->...m", kc.mats[kappa - 1], flat)
    return out.reshape(lead + base.shape)


def t_sum_hat(kc: KernelCoeffs, u: np.ndarray) -> np.ndarray:
    """Coefficients of ``sum_kappa T_kappa u``."""
    if kc.is_flat:
        return np.zeros(u.shape, dtype=complex)
    total = kc.mats.sum(axis=0)
    lead = u.shape[:-2]
    out = np.einsum("mp,...p->...m", total, u.reshape(lead + (-1,)))
    return out.reshape(lead + kc.grid.base.shape)


def t_kappa_apply(kappa: int, kc: KernelCoeffs, u: np.ndarray) -> np.ndarray:
    """``T0^{-1} T_kappa u`` on the grid."""
    return sc.from_spectral(sc.t0_inverse(t_kappa_hat(kappa, kc, u), kc.grid.L))


def kernel_identity_defect(flow: FlowData, kc: KernelCoeffs, u: np.ndarray, n_quad_z: int = 2) -> float:
    """``max |A[u o Psi^{-1}] - (T0 + sum T_kappa) u|`` on the grid."""
    grid = flow.grid
    lhs = op_A_apply(transport.pullback(flow, u), grid, n_quad_z)
    rhs_hat = sc.t0_apply(sc.to_spectral(u) * grid.base.keep, grid.L) + t_sum_hat(kc, u)
    return float(np.max(np.abs(lhs - sc.from_spectral(rhs_hat))))


# -- trace structure ------------------------------------------------------------


def _trace_combination(a1: np.ndarray, a2: np.ndarray, grid: TorusGrid2):
    """Tangential trace coefficients produced by normal-derivative data ``(a1, a2)``.

    Returns ``((mn/k^2) a1 + (n^2/k^2 - 1) a2, (1 - m^2/k^2) a1 - (mn/k^2) a2)``.
    """
    pmm, pmn, pnn = sc.projector_symbols(grid)
    return pmn * a1 + (pnn - 1) * a2, (1 - pmm) * a1 - pmn * a2


def op_S_hat(A_hat: np.ndarray, L: float):
    """``(S1, S2)`` in spectral form from the coefficients of ``A[delta j_1], A[delta j_2]``."""
    grid = TorusGrid2.of(A_hat)
    c1, c2 = _trace_combination(A_hat[0], A_hat[1], grid)
    return sc.t0_inverse(c1, L) * grid.keep, sc.t0_inverse(c2, L) * grid.keep


def op_S(delta_j: np.ndarray, grid: SlabGrid3, n_quad_z: int = 2):
    """Trace contributions of the non-passive current, ``T0^{-1}`` applied."""
    A_hat = op_A_hat(delta_j[:2], grid, n_quad_z)
    s1, s2 = op_S_hat(A_hat, grid.L)
    return sc.from_spectral(s1), sc.from_spectral(s2)


def _inflow_coefficients(b: np.ndarray, db_dz: np.ndarray):
    """``b`` and ``d3 b3`` at ``z = 0``."""
    return b[:, 0], db_dz[2, 0]


def op_H_star(b: np.ndarray, u: np.ndarray):
    """The ``u``-dependent part of the divergence-constraint correction.

    With ``q = d1 b3 u1 + d2 b3 u2 + b3 (d1 u1 + d2 u2)`` at the inflow face,
    returns ``(B_y(-q), B_x(-q))`` where ``B_x, B_y`` have symbols
    ``-i m/|xi|^2`` and ``-i n/|xi|^2``.
    """
    b0 = b[:, 0] if b.ndim == 4 else b
    q = sc.dx(b0[2]) * u[0] + sc.dy(b0[2]) * u[1] + b0[2] * (sc.dx(u[0]) + sc.dy(u[1]))
    qh = sc.to_spectral(-q)
    return sc.from_spectral(sc.op_B_y(qh)), sc.from_spectral(sc.op_B_x(qh))


def _j3_forcing(b: np.ndarray, db_dz: np.ndarray, j3: np.ndarray) -> np.ndarray:
    """``b1 d1 j3 + b2 d2 j3 - d3 b3 j3`` at the inflow face."""
    b0, d3b3 = _inflow_coefficients(b, db_dz)
    return b0[0] * sc.dx(j3) + b0[1] * sc.dy(j3) - d3b3 * j3


# -- right-hand side and Upsilon --------------------------------------------------


def build_rhs(
    b: np.ndarray,
    data: BoundaryData,
    derived: DerivedBoundary,
    flow: FlowData,
    n_quad_z: int = 2,
):
    """Inflow-face right-hand side ``(rhs1, rhs2)``.

    The mean modes carry ``<j3 g1>`` and ``<j3 g2>``; the other modes carry
    the flat trace inversion of ``G``, the divergence correction driven by
    ``j3`` and, for a curved flow, the trace contribution of the transported
    ``j3``.
    """
    grid = TorusGrid2.of(derived.G1)
    L = flow.grid.L
    pmm, pmn, pnn = sc.projector_symbols(grid)
    G1h = sc.to_spectral(derived.G1)
    G2h = sc.to_spectral(derived.G2)
    j3 = derived.j0_3
    r1 = pmn * G1h + pnn * G2h
    r2 = -pmm * G1h - pmn * G2h
    if np.any(b):
        fh = sc.to_spectral(_j3_forcing(b, flow.db_dz, j3))
        r1 = r1 + sc.op_B_x(fh)
        r2 = r2 + sc.op_B_y(fh)
        if not flow.is_flat:
            zero = np.zeros_like(j3)
            delta = transport.transport_delta(flow, np.stack([zero, zero, j3]))
            s1, s2 = op_S_hat(op_A_hat(delta[:2], flow.grid, n_quad_z), L)
            r1 = r1 - s2
            r2 = r2 + s1
    r1 = r1 * grid.keep
    r2 = r2 * grid.keep
    r1[0, 0] = AREA * sc.mean(j3 * data.g[0])
    r2[0, 0] = AREA * sc.mean(j3 * data.g[1])
    return sc.from_spectral(r1), sc.from_spectral(r2)


def upsilon_apply(
    b: np.ndarray,
    flow: FlowData,
    kc: KernelCoeffs,
    data: BoundaryData,
    u: np.ndarray,
    n_quad_z: int = 2,
) -> np.ndarray:
    """``Upsilon u`` for ``u = (j0_1, j0_2)``; linear in ``u``."""
    grid = flow.grid
    base = grid.base
    L = grid.L
    out = np.zeros((2,) + base.shape, dtype=complex)
    if not flow.is_flat:
        V = sc.t0_inverse(t_sum_hat(kc, u), L)
        zero = np.zeros(base.shape)
        delta = transport.transport_delta(flow, np.stack([u[0], u[1], zero]))
        V = V + sc.t0_inverse(op_A_hat(delta[:2], grid, n_quad_z), L)
        c1, c2 = _trace_combination(V[0], V[1], base)
        out[0] = c2
        out[1] = -c1
        h1, h2 = op_H_star(b, u)
        out[0] -= sc.to_spectral(h2)
        out[1] -= sc.to_spectral(h1)
    out *= base.keep
    out[0, 0, 0] = AREA * sc.mean(u[0] * data.f_minus)
    out[1, 0, 0] = AREA * sc.mean(u[1] * data.f_minus)
    return sc.from_spectral(out)


# -- solver -----------------------------------------------------------------------


@dataclass
class NeumannTrace:
    increments: list = field(default_factory=list)

    @property
    def contraction(self) -> float:
        if len(self.increments) < 2 or self.increments[-2] == 0:
            return 0.0
        return float(self.increments[-1] / self.increments[-2])


def solve_j0(
    b: np.ndarray,
    flow: FlowData,
    kc: KernelCoeffs,
    data: BoundaryData,
    derived: DerivedBoundary,
    tol: float = 1e-10,
    max_iter: int = 200,
    damping: float = 1.0,
    n_quad_z: int = 2,
) -> CurrentBoundary:
    """Damped fixed-point iteration ``u <- (1-d) u + d (rhs - Upsilon u)`` from ``u = rhs``."""
    r = np.stack(build_rhs(b, data, derived, flow, n_quad_z))
    u = r.copy()
    trace = NeumannTrace()
    growth = 0
    it = 0
    for it in range(1, max_iter + 1):
        nxt = r - upsilon_apply(b, flow, kc, data, u, n_quad_z)
        if damping != 1.0:
            nxt = (1 - damping) * u + damping * nxt
        delta = float(np.max(np.abs(nxt - u)))
        if trace.increments and delta > trace.increments[-1]:
            growth += 1
        else:
            growth = 0
        trace.increments.append(delta)
        u = nxt
        if not np.all(np.isfinite(u)):
            raise NeumannDivergence("non-finite inflow current")
        if growth >= 3:
            raise NeumannDivergence(
                f"Neumann increments grew for 3 steps (last {delta:.3e}); data too large"
            )
        if delta < tol:
            break
    else:
        raise NeumannDivergence(f"no convergence in {max_iter} Neumann steps (last {delta:.3e})")
    log.debug("inflow current converged in %d steps, contraction %.3e", it, trace.contraction)
    return CurrentBoundary(u[0], u[1], derived.j0_3.copy(), iterations=it, contraction=trace.contraction)


def neumann_contraction(
    b: np.ndarray,
    flow: FlowData,
    kc: KernelCoeffs,
    data: BoundaryData,
    probe: np.ndarray,
    steps: int = 6,
    n_quad_z: int = 2,
) -> float:
    """Power-iteration estimate of the spectral radius of ``Upsilon`` restricted to non-mean modes.

    The mean modes are excluded because the flux-side mean coupling is a
    separate (data-sized) scalar contraction.
    """
    v = probe - sc.mean(probe)[..., None, None]
    ratio = 0.0
    for _ in range(steps):
        nv = float(np.max(np.abs(v)))
        if nv == 0:
            return 0.0
        v = v / nv
        w = upsilon_apply(b, flow, kc, data, v, n_quad_z)
        w = w - sc.mean(w)[..., None, None]
        ratio = float(np.max(np.abs(w)))
        v = w
    return ratio


def constraint_residual(b: np.ndarray, db_dz: np.ndarray, j0: CurrentBoundary) -> float:
    """Max of ``(1+b3) div_h j0 + grad b3 . j0 - b1 d1 j0_3 - b2 d2 j0_3`` at the inflow face."""
    b0, d3b3 = _inflow_coefficients(b, db_dz)
    u1, u2, j3 = j0.j0_1, j0.j0_2, j0.j0_3
    res = (
        (1 + b0[2]) * (sc.dx(u1) + sc.dy(u2))
        + sc.dx(b0[2]) * u1
        + sc.dy(b0[2]) * u2
        + d3b3 * j3
        - b0[0] * sc.dx(j3)
        - b0[1] * sc.dy(j3)
    )
    return float(np.max(np.abs(res)))


def compute_fluxes(
    j: np.ndarray,
    derived: DerivedBoundary,
    g: np.ndarray,
    grid: SlabGrid3,
    n_quad_z: int = 2,
    mean_tol: float = 1e-6,
) -> Fluxes:
    """Plane fluxes of the div-curl field whose mean inflow trace equals ``<g>``.

    Together with the mean conditions already imposed on ``j0`` this makes
    the pressure periodic.
    """
    pot = solve_vector_potential(j, derived, grid, n_quad_z, mean_tol)
    cz = curl_potential(pot)
    A1 = float(sc.mean(g[0]) - sc.mean(cz[0, 0]))
    A2 = float(sc.mean(g[1]) - sc.mean(cz[1, 0]))
    W = cz.copy()
    W[0] += A1
    W[1] += A2
    return plane_fluxes(W, grid, n_quad_z)
