"""Anti-integrable limit toolkit for the quadratic 3D map.

AI states of two-symbol words, their persistence by contraction, and
pseudo-arclength continuation with saddle-node and period-doubling detection.
"""
from .ai_limit import ai_state, extract_symbols, region_check, x_star
from .continuation import (
    ContinuationOptions,
    ResidualSystem,
    continue_branch,
    detect_bifurcations,
    multipliers,
    pd_fixed_point_formula,
)
from .core import StructuralParams, SymbolSequence, UnfoldingParams, classify
from .kernels import BACKEND
from .persistence import epsilon_N, solve_orbit_contraction
from .presets import PRESETS

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ContinuationOptions",
    "PRESETS",
    "ResidualSystem",
    "StructuralParams",
    "SymbolSequence",
    "UnfoldingParams",
    "ai_state",
    "classify",
    "continue_branch",
    "detect_bifurcations",
    "epsilon_N",
    "extract_symbols",
    "multipliers",
    "pd_fixed_point_formula",
    "region_check",
    "solve_orbit_contraction",
    "x_star",
]
