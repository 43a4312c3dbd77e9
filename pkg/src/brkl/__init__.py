"""Numerical lab for Bochner-Riesz kernels of radial monomial graph varieties."""
from .variety import Variety, exponent_report, make_variety, validate_variety

__version__ = "0.1.0"

__all__ = ["Variety", "exponent_report", "make_variety", "validate_variety", "__version__"]
