"""Geometry of finite point configurations.

Exact L2 transport distances with optimal matchings, localized distances,
geodesics and flows, Gibbs point-process samplers and the analysis tools
built on top of them.
"""

from ._errors import NumericError, UsageError
from .configuration import Box, Configuration
from .coupling import INFINITE, ExtendedDistance, Finite, Matching, rho, rho_localized
from .space import Ball, CompactVectorField, bump_field, pushforward

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "CompactVectorField", "Configuration", "ExtendedDistance", "Finite",
    "INFINITE", "Matching", "NumericError", "UsageError", "bump_field", "pushforward", "rho",
    "rho_localized", "__version__",
]
