"""Solver configuration and its flat ``key=value`` file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ValidationError
from .spectral_core import SlabGrid3, TorusGrid2


@dataclass(frozen=True)
class SolverConfig:
    n_x: int = 16
    n_y: int = 16
    n_z: int = 32
    L: float = 1.0
    n_s: int = 32
    n_quad_z: int = 2
    fp_tol: float = 1e-10
    j0_tol: float = 1e-10
    flow_tol: float = 1e-10
    max_outer: int = 50
    max_neumann: int = 200
    max_newton: int = 50
    M_max: float = 0.1
    damping: float = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        for name in ("n_x", "n_y", "n_z"):
            if getattr(self, name) < 4:
                raise ValidationError(f"{name} must be >= 4")
        for name in ("n_x", "n_y"):
            if getattr(self, name) % 2:
                raise ValidationError(f"{name} must be even")
        for name in ("fp_tol", "j0_tol", "flow_tol", "L", "M_max"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("n_s", "n_quad_z", "max_outer", "max_neumann", "max_newton"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if not 0 < self.damping <= 1:
            raise ValidationError("damping must lie in (0, 1]")

    @property
    def torus(self) -> TorusGrid2:
        return TorusGrid2(self.n_x, self.n_y)

    @property
    def slab(self) -> SlabGrid3:
        return SlabGrid3(self.torus, self.n_z, self.L)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{k}={v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "SolverConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line {lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValidationError(f"config line {lineno}: unknown key {key!r}")
            try:
                values[key] = int(val) if types[key] in (int, "int") else float(val)
            except ValueError:
                raise ValidationError(f"config line {lineno}: bad value {val!r} for {key}") from None
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path) -> "SolverConfig":
        return cls.from_text(Path(path).read_text())
