"""Perturbative magneto-hydrostatic equilibria in a periodic slab.

Solves ``j x B = grad p``, ``curl B = j``, ``div B = 0`` on the 2-torus times
``[0, L]`` with ``B.n = 1 + f`` on both faces and tangential ``B = g`` on the
inflow face, by fixed-point iteration around the uniform vertical field.
"""

__version__ = "0.1.0"

from .boundary_data import BoundaryData, derive, validate
from .config import SolverConfig
from .divcurl import Fluxes, divcurl_solve
from .errors import (
    CompatibilityViolation,
    MHSError,
    NeumannDivergence,
    NonConvergence,
    SmallnessViolation,
    ValidationError,
)
from .fixed_point import DiagnosticsReport, SolverState, gamma_step, solve, verify
from .linear_oracle import linear_field, linear_fluxes, linear_j0
from .spectral_core import SlabGrid3, TorusGrid2

__all__ = [
    "BoundaryData",
    "CompatibilityViolation",
    "DiagnosticsReport",
    "Fluxes",
    "MHSError",
    "NeumannDivergence",
    "NonConvergence",
    "SlabGrid3",
    "SmallnessViolation",
    "SolverConfig",
    "SolverState",
    "TorusGrid2",
    "ValidationError",
    "derive",
    "divcurl_solve",
    "gamma_step",
    "linear_field",
    "linear_fluxes",
    "linear_j0",
    "solve",
    "validate",
    "verify",
]
