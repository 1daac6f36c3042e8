"""Symmetric monopole chains: spectral data, cyclic Higgs bundles, Toda solver, Nahm transform."""
from ._kernels import BACKEND
from .errors import (IllConditionedLatticeError, IncompatibleGridError, InvalidParameterError,
                     MonochainError, NumericalBlowupError, ScanQualityError)
from .spectral import ChainParams, build_lattice, build_params, classify, group_order

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChainParams", "IllConditionedLatticeError", "IncompatibleGridError",
    "InvalidParameterError", "MonochainError", "NumericalBlowupError", "ScanQualityError",
    "build_lattice", "build_params", "classify", "group_order",
]
