"""Boundary data, its validation and the derived surface functions.

Given the normal data ``f`` on both faces and the tangential data ``g`` on the
inflow face ``z = 0``, this module builds the potentials ``h`` whose curl
reproduces ``f``, the harmonic tangential traces ``Z_script`` those potentials
induce at ``z = 0``, the reduced tangential data ``G = T0^{-1}(g - Z_script)``
and the normal current ``j0_3 = d1 g2 - d2 g1``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral_core as sc
from .errors import CompatibilityViolation, SmallnessViolation, ValidationError
from .spectral_core import TorusGrid2


@dataclass(frozen=True)
class BoundaryData:
    """Normal data on both faces and tangential data on the inflow face."""

    f_minus: np.ndarray
    f_plus: np.ndarray
    g: np.ndarray  # shape (2, n_x, n_y)

    def __post_init__(self):
        shapes = {self.f_minus.shape, self.f_plus.shape, self.g.shape[1:]}
        if len(shapes) != 1 or self.g.shape[0] != 2 or self.f_minus.ndim != 2:
            raise ValidationError("boundary fields must share one 2D grid; g needs 2 components")
        for name in ("f_minus", "f_plus", "g"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} has non-finite values")

    @property
    def grid(self) -> TorusGrid2:
        return TorusGrid2.of(self.f_minus)

    @classmethod
    def zeros(cls, grid: TorusGrid2) -> "BoundaryData":
        z = np.zeros(grid.shape)
        return cls(z, z.copy(), np.zeros((2,) + grid.shape))

    def scaled(self, factor: float) -> "BoundaryData":
        return BoundaryData(self.f_minus * factor, self.f_plus * factor, self.g * factor)


@dataclass(frozen=True)
class DerivedBoundary:
    h1_minus: np.ndarray
    h1_plus: np.ndarray
    h2_minus: np.ndarray
    h2_plus: np.ndarray
    Z1_script: np.ndarray
    Z2_script: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    j0_3: np.ndarray
    f_mean: float


def smallness_estimate(data: BoundaryData, alpha: float) -> float:
    """Sum of the ``C^{2,alpha}`` grid estimates of ``f_minus``, ``f_plus``, ``g1``, ``g2``."""
    fields = (data.f_minus, data.f_plus, data.g[0], data.g[1])
    return sum(sc.holder_norm_estimate(v, 2, alpha) for v in fields)


def validate(data: BoundaryData, M_max: float = 0.1, alpha: float = 0.5, tol: float = 1e-10):
    """Raise if the data violates compatibility or smallness."""
    gap = abs(float(sc.mean(data.f_minus) - sc.mean(data.f_plus)))
    if gap > tol:
        raise CompatibilityViolation(f"face means of f differ by {gap:.3e}")
    size = smallness_estimate(data, alpha)
    if size > M_max:
        raise SmallnessViolation(f"Holder estimate {size:.3e} exceeds M_max={M_max:g}")


def _antiderivative_x(f: np.ndarray) -> np.ndarray:
    """``int_0^x`` of the x-mean-free part of ``f``, for every y."""
    grid = TorusGrid2.of(f)
    c = np.fft.fft2(f) * grid.keep
    sym = np.zeros(grid.m.shape, dtype=complex)
    np.divide(1.0, 1j * grid.m, out=sym, where=grid.m != 0)
    P = np.fft.ifft2(c * sym).real
    return P - P[0:1, :]


def _antiderivative_y_of_xmean(f: np.ndarray) -> np.ndarray:
    """``int_0^y`` of the x-mean of ``f`` minus its total mean, broadcast over x."""
    ny = f.shape[1]
    col = f.mean(axis=0)
    c = np.fft.fft(col)
    nvec = np.fft.fftfreq(ny, 1.0 / ny)
    c[np.abs(nvec) >= ny // 2] = 0
    sym = np.zeros(ny, dtype=complex)
    np.divide(1.0, 1j * nvec, out=sym, where=nvec != 0)
    Q = np.fft.ifft(c * sym).real
    return np.broadcast_to(Q - Q[0], f.shape).copy()


def build_h(data: BoundaryData):
    """Surface potentials ``(h1_minus, h1_plus, h2_minus, h2_plus)``.

    ``h2`` is the x-antiderivative of ``f`` with its linear drift removed and
    ``h1`` the y-only correction that restores the x-mean, so that
    ``d1 h2 - d2 h1 = f - <f>`` on each face.
    """
    out = {}
    for tag, f in (("minus", data.f_minus), ("plus", data.f_plus)):
        out["h2_" + tag] = _antiderivative_x(f)
        out["h1_" + tag] = -_antiderivative_y_of_xmean(f)
    return out["h1_minus"], out["h1_plus"], out["h2_minus"], out["h2_plus"]


def face_factors(k: np.ndarray, L: float) -> tuple[np.ndarray, np.ndarray]:
    """``k cosh(kL)/sinh(kL)`` and ``k/sinh(kL)``, both ``1/L`` at ``k = 0``."""
    k = np.asarray(k, float)
    den = -np.expm1(-2 * k * L)
    with np.errstate(divide="ignore", invalid="ignore"):
        coth = k * (1 + np.exp(-2 * k * L)) / den
        csch = 2 * k * np.exp(-k * L) / den
    coth = np.where(k > 0, coth, 1.0 / L)
    csch = np.where(k > 0, csch, 1.0 / L)
    return coth, csch


def build_Z_script(h1_minus, h1_plus, h2_minus, h2_plus, L: float):
    """Tangential traces at ``z = 0`` of the harmonic field carrying the potentials."""
    grid = TorusGrid2.of(h1_minus)
    pmm, pmn, pnn = sc.projector_symbols(grid)
    coth, csch = face_factors(grid.kabs, L)
    h1m, h1p, h2m, h2p = (sc.to_spectral(h) * grid.keep for h in (h1_minus, h1_plus, h2_minus, h2_plus))
    z1 = -h1m * pmn * coth + h1p * pmn * csch - h2m * (pnn - 1) * coth + h2p * (pnn - 1) * csch
    z2 = h1m * (pmm - 1) * coth - h1p * (pmm - 1) * csch + h2m * pmn * coth - h2p * pmn * csch
    return sc.from_spectral(z1), sc.from_spectral(z2)


def build_G(g: np.ndarray, Z1_script: np.ndarray, Z2_script: np.ndarray, L: float):
    """``G_l = T0^{-1}(g_l - Z_script_l)``."""
    g1t = sc.to_spectral(g[0] - Z1_script)
    g2t = sc.to_spectral(g[1] - Z2_script)
    return sc.from_spectral(sc.t0_inverse(g1t, L)), sc.from_spectral(sc.t0_inverse(g2t, L))


def j0_third(g: np.ndarray) -> np.ndarray:
    """Normal current on the inflow face, ``d1 g2 - d2 g1``."""
    return sc.dx(g[1]) - sc.dy(g[0])


def derive(data: BoundaryData, L: float) -> DerivedBoundary:
    h = build_h(data)
    Z1, Z2 = build_Z_script(*h, L)
    G1, G2 = build_G(data.g, Z1, Z2, L)
    return DerivedBoundary(
        h1_minus=h[0],
        h1_plus=h[1],
        h2_minus=h[2],
        h2_plus=h[3],
        Z1_script=Z1,
        Z2_script=Z2,
        G1=G1,
        G2=G2,
        j0_3=j0_third(data.g),
        f_mean=float(sc.mean(data.f_minus)),
    )


# -- data ingestion ---------------------------------------------------------

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def evaluate_expression(text: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate an arithmetic expression in ``x`` and ``y`` on node arrays.

    Supported: numbers, ``x``, ``y``, ``pi``, ``e``, ``+ - * / **``, unary
    minus and the functions ``sin``, ``cos``, ``exp``.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse expression {text!r}: {exc.msg}") from None
    env = {"x": x, "y": y}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ValidationError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValidationError(f"unsupported syntax in expression {text!r}")

    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(ev(tree), dtype=float), x.shape).copy()
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"expression {text!r} is not finite on the grid")
    return out


def field_from_expression(text: str, grid: TorusGrid2) -> np.ndarray:
    x, y = grid.mesh
    return evaluate_expression(text, x, y)


def field_from_csv(path: str | Path, grid: TorusGrid2 | None = None) -> np.ndarray:
    """Read a node table: first line ``nx,ny``, then ``nx*ny`` values row-major."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if lines and lines[0].replace(" ", "").lower() == "nx,ny":
        lines = lines[1:]
    try:
        nx, ny = (int(v) for v in lines[0].split(","))
        vals = np.array(
            [float(v) for ln in lines[1:] for v in ln.replace(",", " ").split()], dtype=float
        )
    except (ValueError, IndexError):
        raise ValidationError(f"malformed CSV field file {path}") from None
    if vals.size != nx * ny:
        raise ValidationError(f"{path}: expected {nx * ny} values, found {vals.size}")
    if grid is not None and (nx, ny) != grid.shape:
        raise ValidationError(f"{path}: grid {nx}x{ny} does not match {grid.n_x}x{grid.n_y}")
    return vals.reshape(nx, ny)
