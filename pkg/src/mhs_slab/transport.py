"""Characteristics of the perturbed field and transport of the current.

Field lines of ``B = e3 + b`` are graphs over the slab height, so the flow
``Psi_z(r)`` solves ``dX/dz = b1/(1+b3)``, ``dY/dz = b2/(1+b3)`` from the
identity at ``z = 0``.  Along each line the current obeys the linear ODE
``dw/dz = A(b) w`` with ``A_lj = d_j b_l / (1 + b3)``; we integrate the
fundamental matrix of that ODE alongside the flow so any inflow current can
be transported with one matrix product.  The Eulerian current is recovered by
composing with the inverse flow.

Off-grid values in (x, y) come from the trigonometric interpolant of each
z-slice (evaluated by the kernels in ``_accel``); between z-slices a local
cubic Lagrange interpolant is used.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import spectral_core as sc
from . import zgrid
from ._accel import fourier_eval
from .errors import FieldTooLarge, InversionFailure, StepFailure
from .spectral_core import SlabGrid3, TorusGrid2

log = logging.getLogger(__name__)

B3_MARGIN = 0.05
Z_INTERP_DEGREE = 3


@dataclass
class FlowData:
    grid: SlabGrid3
    X: np.ndarray  # (nz+1, nx, ny) x-coordinate of Psi_z at each start node
    Y: np.ndarray
    Lambda: np.ndarray  # (2, nz+1, nx, ny)
    grad_Lambda: np.ndarray  # (4, nz+1, nx, ny): d1L1, d2L1, d1L2, d2L2
    Theta: np.ndarray  # (nz+1, nx, ny)
    fundamental: np.ndarray  # (nz+1, 3, 3, nx, ny)
    b: np.ndarray  # (3, nz+1, nx, ny)
    db_dz: np.ndarray  # (3, nz+1, nx, ny)
    PsiInv: np.ndarray | None = None  # (2, nz+1, nx, ny) absolute coordinates
    newton_steps: int = 0

    @property
    def is_flat(self) -> bool:
        return not np.any(self.b)

    def pull(self, values: np.ndarray) -> np.ndarray:
        """Compose per-slice node data with the inverse flow.

        ``values`` has shape ``(C, nz+1, nx, ny)``, sampled at the start nodes
        of the characteristics; the result is sampled at the Eulerian grid.
        """
        if self.PsiInv is None:
            raise ValueError("inverse flow not computed; call invert_flow first")
        if self.is_flat:
            return values.copy()
        base = self.grid.base
        out = np.empty_like(values)
        for s in range(values.shape[1]):
            c = np.fft.fft2(values[:, s], axes=(-2, -1)) * base.keep
            ev = fourier_eval(c, base.m.ravel(), base.n.ravel(),
                              self.PsiInv[0, s].ravel(), self.PsiInv[1, s].ravel())
            out[:, s] = ev.reshape(values.shape[0], *base.shape)
        return out


def _coeffs(fields: np.ndarray, grid: TorusGrid2) -> np.ndarray:
    return np.fft.fft2(fields, axes=(-2, -1)) * grid.keep


def integrate_flow(b: np.ndarray, grid: SlabGrid3) -> FlowData:
    """RK4 integration of the characteristics and of the transport matrix."""
    base = grid.base
    nzp = grid.n_z + 1
    if b.shape != (3,) + grid.shape:
        raise ValueError(f"b must have shape {(3,) + grid.shape}, got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise StepFailure("b has non-finite values")
    top = float(np.max(np.abs(b[2]), initial=0.0))
    if top >= 1 - B3_MARGIN:
        raise FieldTooLarge(f"max |b3| = {top:.3f} too close to 1")
    db = zgrid.dz(b, grid.L, axis=1)
    x, y = base.mesh
    P = base.size
    ident = np.broadcast_to(np.eye(3)[:, :, None, None], (nzp, 3, 3) + base.shape).copy()
    if not np.any(b):
        zeros = np.zeros((nzp,) + base.shape)
        return FlowData(
            grid=grid,
            X=np.broadcast_to(x, (nzp,) + base.shape).copy(),
            Y=np.broadcast_to(y, (nzp,) + base.shape).copy(),
            Lambda=np.zeros((2,) + grid.shape),
            grad_Lambda=np.zeros((4,) + grid.shape),
            Theta=zeros,
            fundamental=ident,
            b=b,
            db_dz=db,
        )

    inv = 1.0 / (1.0 + b[2])
    d1 = sc.dx(b)
    d2 = sc.dy(b)
    # fields: v1, v2, then A row-major a_lj = d_j b_l / (1 + b3)
    fields = np.empty((nzp, 11) + base.shape)
    fields[:, 0] = b[0] * inv
    fields[:, 1] = b[1] * inv
    for l in range(3):
        fields[:, 2 + 3 * l] = d1[l] * inv
        fields[:, 3 + 3 * l] = d2[l] * inv
        fields[:, 4 + 3 * l] = db[l] * inv
    coeff = _coeffs(fields, base)
    m, n = base.m.ravel(), base.n.ravel()
    h = grid.dz
    mid = zgrid.interp_matrix(grid.z[:-1] + 0.5 * h, grid.z, Z_INTERP_DEGREE)

    def rhs(c, X, Y, F):
        vals = fourier_eval(c, m, n, X, Y)
        A = vals[2:].reshape(3, 3, P)
        return vals[0], vals[1], np.einsum("ikp,kjp->ijp", A, F)

    X = x.ravel().copy()
    Y = y.ravel().copy()
    F = np.broadcast_to(np.eye(3)[:, :, None], (3, 3, P)).copy()
    Xs = np.empty((nzp, P))
    Ys = np.empty((nzp, P))
    Fs = np.empty((nzp, 3, 3, P))
    Xs[0], Ys[0], Fs[0] = X, Y, F
    for i in range(grid.n_z):
        c0, c2 = coeff[i], coeff[i + 1]
        c1 = np.tensordot(mid[i], coeff, axes=(0, 0))
        k1 = rhs(c0, X, Y, F)
        k2 = rhs(c1, X + 0.5 * h * k1[0], Y + 0.5 * h * k1[1], F + 0.5 * h * k1[2])
        k3 = rhs(c1, X + 0.5 * h * k2[0], Y + 0.5 * h * k2[1], F + 0.5 * h * k2[2])
        k4 = rhs(c2, X + h * k3[0], Y + h * k3[1], F + h * k3[2])
        X = X + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Y = Y + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        F = F + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y)) and np.all(np.isfinite(F))):
            raise StepFailure(f"non-finite characteristic state at z={grid.z[i + 1]:.4g}")
        Xs[i + 1], Ys[i + 1], Fs[i + 1] = X, Y, F

    shape = (nzp,) + base.shape
    Xs = Xs.reshape(shape)
    Ys = Ys.reshape(shape)
    Lam = np.stack([Xs - x, Ys - y])
    grad = np.stack([sc.dx(Lam[0]), sc.dy(Lam[0]), sc.dx(Lam[1]), sc.dy(Lam[1])])
    Theta = jacobian_deviation(grad)
    return FlowData(
        grid=grid,
        X=Xs,
        Y=Ys,
        Lambda=Lam,
        grad_Lambda=grad,
        Theta=Theta,
        fundamental=Fs.reshape((nzp, 3, 3) + base.shape),
        b=b,
        db_dz=db,
    )


def jacobian_deviation(grad: np.ndarray) -> np.ndarray:
    """``det(I + grad Lambda) - 1`` from the four gradient components."""
    return grad[0] + grad[3] + grad[0] * grad[3] - grad[1] * grad[2]


def invert_flow(flow: FlowData, tol: float = 1e-10, max_newton: int = 50) -> FlowData:
    """Newton inversion of ``Psi_z`` on every slice, seeded by ``r - Lambda(r)``."""
    grid = flow.grid
    base = grid.base
    x, y = base.mesh
    if flow.is_flat:
        flow.PsiInv = np.stack([np.broadcast_to(x, grid.shape), np.broadcast_to(y, grid.shape)]).copy()
        return flow
    if np.min(1.0 + flow.Theta) <= 0:
        raise InversionFailure("flow map is not orientation preserving")
    m, n = base.m.ravel(), base.n.ravel()
    out = np.empty((2,) + grid.shape)
    out[:, 0] = x, y
    worst_steps = 0
    for s in range(1, grid.n_z + 1):
        c = np.fft.fft2(flow.Lambda[:, s], axes=(-2, -1)) * base.keep
        cg = np.stack([c[0] * 1j * base.m, c[0] * 1j * base.n, c[1] * 1j * base.m, c[1] * 1j * base.n])
        coeff = np.concatenate([c, cg])
        tx, ty = x.ravel(), y.ravel()
        ex = tx - flow.Lambda[0, s].ravel()
        ey = ty - flow.Lambda[1, s].ravel()
        for step in range(max_newton + 1):
            v = fourier_eval(coeff, m, n, ex, ey)
            rx = ex + v[0] - tx
            ry = ey + v[1] - ty
            err = max(np.max(np.abs(rx)), np.max(np.abs(ry)))
            if err < tol:
                break
            if step == max_newton:
                raise InversionFailure(
                    f"Newton inversion stalled at z={grid.z[s]:.4g}, residual {err:.3e}"
                )
            a, bb, cc, d = 1 + v[2], v[3], v[4], 1 + v[5]
            det = a * d - bb * cc
            ex = ex - (d * rx - bb * ry) / det
            ey = ey - (-cc * rx + a * ry) / det
        worst_steps = max(worst_steps, step)
        out[0, s] = ex.reshape(base.shape)
        out[1, s] = ey.reshape(base.shape)
    flow.PsiInv = out
    flow.newton_steps = worst_steps
    log.debug("flow inverted, max Newton steps %d", worst_steps)
    return flow


def flow_for(b: np.ndarray, grid: SlabGrid3, tol: float = 1e-10, max_newton: int = 50) -> FlowData:
    return invert_flow(integrate_flow(b, grid), tol, max_newton)


def lagrangian_current(flow: FlowData, j0: np.ndarray) -> np.ndarray:
    """``w(r, z) = F(r, z) j0(r)`` along each characteristic, shape ``(3, nz+1, nx, ny)``."""
    w = np.einsum("zijxy,jxy->izxy", flow.fundamental, j0)
    return w


def transport_solve(flow: FlowData, j0: np.ndarray) -> np.ndarray:
    """Eulerian current ``j = w o Phi^{-1}``."""
    return flow.pull(lagrangian_current(flow, j0))


def transport_delta(flow: FlowData, j0: np.ndarray) -> np.ndarray:
    """``delta j = (w - j0) o Phi^{-1}``, the part not carried passively."""
    w = lagrangian_current(flow, j0)
    return flow.pull(w - j0[:, None])


def pullback(flow: FlowData, u: np.ndarray) -> np.ndarray:
    """``u o Psi_z^{-1}`` on every slice for a surface field ``u``."""
    nzp = flow.grid.n_z + 1
    stacked = np.broadcast_to(u, (nzp,) + u.shape)[None]
    return flow.pull(np.ascontiguousarray(stacked))[0]


def divergence(j: np.ndarray, L: float) -> np.ndarray:
    """Spectral (x, y) and high-order finite-difference (z) divergence."""
    return sc.dx(j[0]) + sc.dy(j[1]) + zgrid.dz(j[2], L, axis=0)


def check_div_transport(j: np.ndarray, L: float) -> float:
    """Largest per-slice max-norm of ``div j``."""
    return float(np.max(np.abs(divergence(j, L))))
