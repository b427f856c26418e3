"""Double-humped resonant states in the disordered discrete nonlinear Schroedinger equation."""

from .errors import ArgumentError, HuntFailure, NumericError, PeriodNotFound, StepSizeError
from .hunter import DoubleHumpPair, HuntConfig, break_realization, detect_double_hump, hunt
from .lattice import DisorderRealization, SpectralDecomposition, diagonalize, draw_realization
from .propagator import PropagatorConfig, TimeTrace, evolve
from .twomode import TwoModeCoefficients, compute_coefficients, find_beta_quarter

__all__ = [
    "ArgumentError", "HuntFailure", "NumericError", "PeriodNotFound", "StepSizeError",
    "DoubleHumpPair", "HuntConfig", "break_realization", "detect_double_hump", "hunt",
    "DisorderRealization", "SpectralDecomposition", "diagonalize", "draw_realization",
    "PropagatorConfig", "TimeTrace", "evolve",
    "TwoModeCoefficients", "compute_coefficients", "find_beta_quarter",
]
