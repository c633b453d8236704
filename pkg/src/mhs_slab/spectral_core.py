"""Grids, Fourier transforms on the 2-torus and the multiplier operators.

Coefficients use the unnormalized forward convention

    f_hat(m, n) = int_0^{2pi} int_0^{2pi} f(x, y) exp(-i (m x + n y)) dx dy,

so the zero mode equals ``(2 pi)**2`` times the field mean and the inverse
carries ``1 / (2 pi)**2``.  Arrays are stored in numpy FFT ordering over the
last two axes ``(x, y)``; leading axes are batch dimensions (components,
z-slices).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import SymmetryViolation

TWO_PI = 2.0 * np.pi
AREA = TWO_PI**2
SYMMETRY_RTOL = 1e-10
SYMMETRY_ATOL = 1e-14


@dataclass(frozen=True)
class TorusGrid2:
    """Uniform grid on the 2-torus with ``n_x`` by ``n_y`` nodes."""

    n_x: int
    n_y: int

    def __post_init__(self):
        for name in ("n_x", "n_y"):
            v = getattr(self, name)
            if int(v) != v or v < 4 or v % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {v}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    @cached_property
    def x(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_x) / self.n_x

    @cached_property
    def y(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_y) / self.n_y

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def m(self) -> np.ndarray:
        """Integer x-wavenumbers, shape ``(n_x, 1)``."""
        return np.fft.fftfreq(self.n_x, 1.0 / self.n_x)[:, None]

    @cached_property
    def n(self) -> np.ndarray:
        """Integer y-wavenumbers, shape ``(1, n_y)``."""
        return np.fft.fftfreq(self.n_y, 1.0 / self.n_y)[None, :]

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.m**2 + self.n**2)

    @cached_property
    def keep(self) -> np.ndarray:
        """Mask that is False on the Nyquist row and column."""
        return (np.abs(self.m) < self.n_x // 2) & (np.abs(self.n) < self.n_y // 2)

    @cached_property
    def nonzero(self) -> np.ndarray:
        return self.kabs > 0

    @classmethod
    def of(cls, array: np.ndarray) -> "TorusGrid2":
        return cls(int(array.shape[-2]), int(array.shape[-1]))


@dataclass(frozen=True)
class SlabGrid3:
    """Torus grid extruded over ``[0, L]`` with ``n_z`` uniform steps.

    There are ``n_z + 1`` z-nodes including both faces.
    """

    base: TorusGrid2
    n_z: int
    L: float = 1.0

    def __post_init__(self):
        if int(self.n_z) != self.n_z or self.n_z < 4:
            raise ValueError(f"n_z must be an integer >= 4, got {self.n_z}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @cached_property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n_z + 1)

    @property
    def dz(self) -> float:
        return self.L / self.n_z

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_z + 1, self.base.n_x, self.base.n_y)


def to_spectral(values: np.ndarray) -> np.ndarray:
    """Forward transform over the last two axes."""
    nx, ny = values.shape[-2:]
    return np.fft.fft2(values, axes=(-2, -1)) * (AREA / (nx * ny))


def from_spectral(coeffs: np.ndarray, check: bool = True) -> np.ndarray:
    """Inverse transform; raises if the result is not real."""
    nx, ny = coeffs.shape[-2:]
    out = np.fft.ifft2(coeffs, axes=(-2, -1)) * (nx * ny / AREA)
    if check:
        scale = float(np.max(np.abs(out.real), initial=0.0))
        residue = float(np.max(np.abs(out.imag), initial=0.0))
        # fields that cancel to rounding level are exempt via the absolute floor
        if residue > max(SYMMETRY_RTOL * scale, SYMMETRY_ATOL):
            raise SymmetryViolation(
                f"imaginary residue {residue:.3e} relative to {scale:.3e}"
            )
    return out.real.copy()


Multiplier = Callable[[np.ndarray, np.ndarray], np.ndarray]


def apply_multiplier(coeffs: np.ndarray, mu: np.ndarray | Multiplier) -> np.ndarray:
    """Multiply each mode by ``mu``; ``mu`` is an array or ``mu(m, n)``."""
    if callable(mu):
        grid = TorusGrid2.of(coeffs)
        mu = mu(grid.m, grid.n)
    return coeffs * mu


def _safe_inverse(k: np.ndarray, power: int) -> np.ndarray:
    out = np.zeros_like(k, dtype=float)
    np.divide(1.0, k**power, out=out, where=k > 0)
    return out


def riesz_symbols(grid: TorusGrid2) -> tuple[np.ndarray, np.ndarray]:
    inv = _safe_inverse(grid.kabs, 1) * grid.keep
    return -1j * grid.m * inv, -1j * grid.n * inv


def riesz_x(coeffs: np.ndarray) -> np.ndarray:
    return coeffs * riesz_symbols(TorusGrid2.of(coeffs))[0]


def riesz_y(coeffs: np.ndarray) -> np.ndarray:
    return coeffs * riesz_symbols(TorusGrid2.of(coeffs))[1]


def inverse_gradient_symbols(grid: TorusGrid2) -> tuple[np.ndarray, np.ndarray]:
    """Symbols ``-i m / |xi|^2`` and ``-i n / |xi|^2`` (zero at the origin)."""
    inv = _safe_inverse(grid.kabs, 2) * grid.keep
    return -1j * grid.m * inv, -1j * grid.n * inv


def op_B_x(coeffs: np.ndarray) -> np.ndarray:
    return coeffs * inverse_gradient_symbols(TorusGrid2.of(coeffs))[0]


def op_B_y(coeffs: np.ndarray) -> np.ndarray:
    return coeffs * inverse_gradient_symbols(TorusGrid2.of(coeffs))[1]


def projector_symbols(grid: TorusGrid2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real symbols ``m^2/|xi|^2``, ``mn/|xi|^2``, ``n^2/|xi|^2``, zero at the origin.

    In terms of the Riesz transforms these are ``-R_x^2``, ``-R_x R_y`` and
    ``-R_y^2``.
    """
    inv = _safe_inverse(grid.kabs, 2) * grid.keep
    return grid.m**2 * inv, grid.m * grid.n * inv, grid.n**2 * inv


def slab_multiplier(k: np.ndarray, L: float) -> np.ndarray:
    """``(cosh(kL) - 1) / (k sinh(kL))`` with the value ``L/2`` at ``k = 0``."""
    k = np.asarray(k, dtype=float)
    out = np.full(k.shape, L / 2.0)
    pos = k > 0
    kp = k[pos]
    # small kL: series avoids cancellation in (1 - e)^2 / (1 - e^2)
    small = kp * L < 1e-4
    val = np.empty_like(kp)
    val[~small] = (-np.expm1(-kp[~small] * L)) ** 2 / (
        kp[~small] * -np.expm1(-2 * kp[~small] * L)
    )
    t = kp[small] * L
    val[small] = (L / 2.0) * (1 - t**2 / 12 + t**4 / 120)
    out[pos] = val
    return out


def t0_symbol(grid: TorusGrid2, L: float) -> np.ndarray:
    return slab_multiplier(grid.kabs, L)


def t0_apply(coeffs: np.ndarray, L: float) -> np.ndarray:
    return coeffs * t0_symbol(TorusGrid2.of(coeffs), L)


def t0_inverse(coeffs: np.ndarray, L: float) -> np.ndarray:
    return coeffs / t0_symbol(TorusGrid2.of(coeffs), L)


def dx(values: np.ndarray) -> np.ndarray:
    """Spectral x-derivative of a real field (Nyquist mode dropped)."""
    grid = TorusGrid2.of(values)
    c = np.fft.fft2(values, axes=(-2, -1))
    return np.fft.ifft2(c * (1j * grid.m * grid.keep), axes=(-2, -1)).real


def dy(values: np.ndarray) -> np.ndarray:
    grid = TorusGrid2.of(values)
    c = np.fft.fft2(values, axes=(-2, -1))
    return np.fft.ifft2(c * (1j * grid.n * grid.keep), axes=(-2, -1)).real


def mean(values: np.ndarray) -> np.ndarray:
    """Torus mean over the last two axes."""
    return values.mean(axis=(-2, -1))


def fourier_derivatives(values: np.ndarray, order: int) -> list[np.ndarray]:
    """All mixed spectral derivatives of exactly the given total order."""
    grid = TorusGrid2.of(values)
    c = np.fft.fft2(values, axes=(-2, -1)) * grid.keep
    out = []
    for a in range(order, -1, -1):
        b = order - a
        sym = (1j * grid.m) ** a * (1j * grid.n) ** b
        out.append(np.fft.ifft2(c * sym, axes=(-2, -1)).real)
    return out


def _pair_offsets(cap: int, ndim: int):
    rng = range(-cap, cap + 1)
    if ndim == 2:
        return [(i, j) for i in rng for j in rng if (i, j) > (0, 0)]
    return [
        (k, i, j) for k in rng for i in rng for j in rng if (k, i, j) > (0, 0, 0)
    ]


def holder_seminorm(values: np.ndarray, alpha: float, spacing, cap: int = 2) -> float:
    """Discrete alpha-seminorm over node pairs within ``cap`` cells.

    Periodic wrap in the last two axes; a leading z-axis (3D fields) is not
    wrapped.
    """
    best = 0.0
    for off in _pair_offsets(cap, values.ndim):
        shift = (-off[-2], -off[-1])
        if values.ndim == 3:
            kz, nz = off[0], values.shape[0]
            lo, hi = max(0, -kz), nz - max(0, kz)
            if hi <= lo:
                continue
            base = values[lo:hi]
            other = np.roll(values[lo + kz : hi + kz], shift, axis=(-2, -1))
        else:
            base = values
            other = np.roll(values, shift, axis=(-2, -1))
        dist = np.sqrt(sum((o * s) ** 2 for o, s in zip(off, spacing)))
        best = max(best, float(np.abs(other - base).max()) / dist**alpha)
    return best


def holder_norm_estimate(
    values: np.ndarray, k: int, alpha: float, dz: float | None = None, cap: int = 2
) -> float:
    """Grid proxy for the ``C^{k,alpha}`` norm of a 2D or 3D field.

    Sum of sup norms of all spectral (x, y) derivatives of order up to ``k``
    plus the discrete alpha-seminorm of the order-``k`` derivatives.  For 3D
    fields (z-axis first) only horizontal derivatives are taken; the
    seminorm still runs over 3D node pairs.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    grid = TorusGrid2.of(values)
    spacing = (TWO_PI / grid.n_x, TWO_PI / grid.n_y)
    if values.ndim == 3:
        spacing = (dz if dz is not None else 1.0,) + spacing
    total = float(np.max(np.abs(values), initial=0.0))
    top = [values]
    for order in range(1, k + 1):
        top = fourier_derivatives(values, order)
        total += sum(float(np.max(np.abs(d))) for d in top)
    total += sum(holder_seminorm(d, alpha, spacing, cap) for d in top)
    return total
