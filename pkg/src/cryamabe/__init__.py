"""Numerical toolkit for the CR fractional Yamabe problem on the sphere and the Heisenberg group.

Modules, bottom-up: ``special_fn``, ``sphere_geom``, ``heisenberg``,
``harmonics``, ``operators``, ``symmetry``, ``admissible``, ``solver`` and the
``cli`` entry point.
"""
__version__ = "0.1.0"

from .admissible import admissibility, render_table
from .exceptions import (
    ConvergenceError,
    DimensionError,
    DomainError,
    NonFiniteError,
    PoleError,
)
from .special_fn import lambda_gamma, log_gamma
from .sphere_geom import McEstimate, QuadratureSpec, SpherePoint

__all__ = [
    "__version__",
    "admissibility",
    "render_table",
    "ConvergenceError",
    "DimensionError",
    "DomainError",
    "NonFiniteError",
    "PoleError",
    "lambda_gamma",
    "log_gamma",
    "McEstimate",
    "QuadratureSpec",
    "SpherePoint",
]
