"""Quadratic rational maps of the Riemann sphere.

Fixed-point invariants, periodic cycles, the (X, Y) moduli coordinates and
normal forms, the curves Per_n(ρ), degenerating families, and parameter
plane renderers.
"""

from .errors import NumericError, QRMError, ValidationError
from .points import INF, chordal, is_inf
from .sphere import MobiusTransform, RationalMap2, power_map, quadratic_polynomial

__version__ = "0.1.0"

__all__ = [
    "INF",
    "MobiusTransform",
    "NumericError",
    "QRMError",
    "RationalMap2",
    "ValidationError",
    "chordal",
    "is_inf",
    "power_map",
    "quadratic_polynomial",
]
