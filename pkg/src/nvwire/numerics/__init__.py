"""Special functions, certified complex roots and adaptive quadrature."""

from .bessel import (
    MAX_ORDER,
    CylinderFunctions,
    ModifiedCylinderFunctions,
    bessel_cyl,
    bessel_mod,
)
from .quadrature import (
    QuadratureConfig,
    QuadratureResult,
    gauss_kronrod,
    integrate_half_line,
)
from .roots import RootRegion, find_complex_root, winding_number

__all__ = [
    "MAX_ORDER",
    "CylinderFunctions",
    "ModifiedCylinderFunctions",
    "QuadratureConfig",
    "QuadratureResult",
    "RootRegion",
    "bessel_cyl",
    "bessel_mod",
    "find_complex_root",
    "gauss_kronrod",
    "integrate_half_line",
    "winding_number",
]
