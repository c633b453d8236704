"""Hot kernels with a numba path and a pure-numpy fallback.

Set ``MHS_NO_NUMBA=1`` in the environment to force the numpy versions.  Both
paths compute the same quantities up to floating-point reassociation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("MHS_NO_NUMBA", "0").lower() not in (
    "1",
    "true",
    "yes",
)


def fourier_eval_numpy(coeffs, m, n, xs, ys):
    """Evaluate trigonometric polynomials at scattered points.

    ``coeffs`` has shape ``(F, nx, ny)`` and holds raw ``fft2`` output (already
    masked); ``m`` and ``n`` are the integer wavenumbers.  Returns ``(F, P)``
    real values ``sum c[m, n] exp(i(m x + n y)) / (nx ny)``.
    """
    nx, ny = coeffs.shape[-2:]
    ex = np.exp(1j * np.outer(xs, m))
    ey = np.exp(1j * np.outer(ys, n))
    tmp = ex @ coeffs
    return (tmp * ey[None]).sum(axis=-1).real / (nx * ny)


def kernel_matrices_numpy(m, n, k, lam1, lam2, theta, s, ws, L, ex, ey, darea):
    """Per-mode, per-node coefficients of the four flow kernels.

    ``m, n, k`` are flat mode arrays of length M; ``lam1, lam2, theta`` have
    shape ``(S, P)`` (values at the s-quadrature nodes); ``ex, ey`` are the
    node coordinates.  Returns complex ``(4, M, P)``; row ``kappa`` applied
    to nodal values gives the spectral coefficients of the kappa-th kernel
    operator.
    """
    M, P = m.size, ex.size
    decay, smooth = s_profiles(k, s, L)
    out = np.zeros((4, M, P), dtype=complex)
    for q in range(s.size):
        phase = np.exp(-1j * (np.outer(m, lam1[q]) + np.outer(n, lam2[q])))
        jac = 1.0 + theta[q]
        osc = (phase - 1.0) * jac[None, :]
        th = theta[q][None, :]
        out[0] += (ws[q] * decay[:, q])[:, None] * osc
        out[1] += (ws[q] * decay[:, q])[:, None] * th
        out[2] -= (ws[q] * smooth[:, q])[:, None] * osc
        out[3] -= (ws[q] * smooth[:, q])[:, None] * th
    shift = np.exp(-1j * (np.outer(m, ex) + np.outer(n, ey))) * darea
    return out * shift[None]


def s_profiles(k, s, L):
    """``exp(-k s)`` and the smoothing profile ``M(k, s)`` on a grid of s.

    ``M(k, s) = exp(-2kL) (exp(ks) - exp(-ks)) / (1 - exp(-2kL))`` written with
    non-positive exponents; its ``k -> 0`` limit is ``s / L``.
    """
    k = np.asarray(k, dtype=float)[:, None]
    s = np.asarray(s, dtype=float)[None, :]
    decay = np.exp(-k * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = (np.exp(-k * (2 * L - s)) - np.exp(-k * (2 * L + s))) / -np.expm1(
            -2 * k * L
        )
    smooth = np.where(k > 0, smooth, s / L * np.ones_like(k))
    return decay, smooth


if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def _fourier_eval_nb(cr, ci, m, n, xs, ys):
        F, nx, ny = cr.shape
        P = xs.size
        out = np.zeros((F, P))
        cxr = np.empty(nx)
        cxi = np.empty(nx)
        cyr = np.empty(ny)
        cyi = np.empty(ny)
        scale = 1.0 / (nx * ny)
        for p in range(P):
            for a in range(nx):
                cxr[a] = np.cos(m[a] * xs[p])
                cxi[a] = np.sin(m[a] * xs[p])
            for b in range(ny):
                cyr[b] = np.cos(n[b] * ys[p])
                cyi[b] = np.sin(n[b] * ys[p])
            for f in range(F):
                acc = 0.0
                for a in range(nx):
                    sr = 0.0
                    si = 0.0
                    for b in range(ny):
                        vr = cr[f, a, b]
                        vi = ci[f, a, b]
                        sr += vr * cyr[b] - vi * cyi[b]
                        si += vr * cyi[b] + vi * cyr[b]
                    acc += sr * cxr[a] - si * cxi[a]
                out[f, p] = acc * scale
        return out

    @numba.njit(cache=True, fastmath=False)
    def _kernel_matrices_nb(m, n, lam1, lam2, theta, ws, decay, smooth, ex, ey, darea):
        M = m.size
        S, P = lam1.shape
        out = np.zeros((4, M, P), dtype=np.complex128)
        for i in range(M):
            for p in range(P):
                a0 = 0.0j
                a1 = 0.0j
                a2 = 0.0j
                a3 = 0.0j
                for q in range(S):
                    arg = m[i] * lam1[q, p] + n[i] * lam2[q, p]
                    osc = complex(np.cos(arg) - 1.0, -np.sin(arg)) * (1.0 + theta[q, p])
                    wd = ws[q] * decay[i, q]
                    wm = ws[q] * smooth[i, q]
                    a0 += wd * osc
                    a1 += wd * theta[q, p]
                    a2 -= wm * osc
                    a3 -= wm * theta[q, p]
                arg = m[i] * ex[p] + n[i] * ey[p]
                sh = complex(np.cos(arg), -np.sin(arg)) * darea
                out[0, i, p] = a0 * sh
                out[1, i, p] = a1 * sh
                out[2, i, p] = a2 * sh
                out[3, i, p] = a3 * sh
        return out

    def fourier_eval_numba(coeffs, m, n, xs, ys):
        coeffs = np.ascontiguousarray(coeffs)
        return _fourier_eval_nb(
            np.ascontiguousarray(coeffs.real),
            np.ascontiguousarray(coeffs.imag),
            np.ascontiguousarray(m, dtype=float),
            np.ascontiguousarray(n, dtype=float),
            np.ascontiguousarray(xs, dtype=float),
            np.ascontiguousarray(ys, dtype=float),
        )

    def kernel_matrices_numba(m, n, k, lam1, lam2, theta, s, ws, L, ex, ey, darea):
        decay, smooth = s_profiles(k, s, L)
        return _kernel_matrices_nb(
            np.ascontiguousarray(m, dtype=float),
            np.ascontiguousarray(n, dtype=float),
            np.ascontiguousarray(lam1),
            np.ascontiguousarray(lam2),
            np.ascontiguousarray(theta),
            np.ascontiguousarray(ws),
            np.ascontiguousarray(decay),
            np.ascontiguousarray(smooth),
            np.ascontiguousarray(ex, dtype=float),
            np.ascontiguousarray(ey, dtype=float),
            float(darea),
        )

else:  # pragma: no cover
    fourier_eval_numba = None
    kernel_matrices_numba = None

if USE_NUMBA:
    fourier_eval = fourier_eval_numba
    kernel_matrices = kernel_matrices_numba
else:
    fourier_eval = fourier_eval_numpy
    kernel_matrices = kernel_matrices_numpy
