"""Numerical toolkit for cohomogeneity-two G2 geometry and its calibrated submanifolds."""

from . import errors, fhn_structure, g2_linear, multimoment, tracer, trisymplectic
from ._jit import NUMBA_ACTIVE
from .fhn_structure import FHNParams, FHNState, bryant_salamon_solution, solve_from_singular_orbit
from .g2_linear import metric_from_phi, standard_phi0, standard_star_phi0

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ACTIVE",
    "FHNParams",
    "FHNState",
    "bryant_salamon_solution",
    "errors",
    "fhn_structure",
    "g2_linear",
    "metric_from_phi",
    "multimoment",
    "solve_from_singular_orbit",
    "standard_phi0",
    "standard_star_phi0",
    "tracer",
    "trisymplectic",
]
