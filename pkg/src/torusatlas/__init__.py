"""Stability-zone atlases for plane foliations of periodic surfaces in T^3."""

from .kernel import BACKEND as kernel_backend
from .labeling import MillerIndex, classify_direction
from .models import EnergySlice, get_model
from .torus import RationalDirection

__version__ = "0.1.0"

__all__ = [
    "EnergySlice",
    "MillerIndex",
    "RationalDirection",
    "classify_direction",
    "get_model",
    "kernel_backend",
    "__version__",
]
