"""Numerical toolkit for a toric-code memory coupled to a 3D bosonic bath."""

from .couplings import ModelParams, build_kernel, build_pattern_square, uniform_pattern
from .geometry import build_code_lattice

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "build_code_lattice",
    "build_kernel",
    "build_pattern_square",
    "uniform_pattern",
    "__version__",
]
