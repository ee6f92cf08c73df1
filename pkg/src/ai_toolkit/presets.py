"""Named parameter sets used throughout the examples and tests."""
from __future__ import annotations

from dataclasses import dataclass

from .core import StructuralParams, UnfoldingParams


@dataclass(frozen=True)
class Preset:
    name: str
    label: str
    p: StructuralParams
    sigma: float
    delta: float

    def unfolding(self, epsilon: float = 0.0) -> UnfoldingParams:
        return UnfoldingParams(self.sigma, self.delta, epsilon)


PRESETS = {
    # the parallel-lines coefficients of slope m = -b/(2a) = 0.4
    "parallel": Preset("parallel", "||", StructuralParams(25 / 9, -20 / 9, 4 / 9), 0.1, 0.1),
    "ellipse": Preset("ellipse", "E", StructuralParams(0.9, 0.0, 0.1), 0.5, 0.25),
    "henon": Preset("henon", "He", StructuralParams(1.0, 0.0, 0.0), -0.3, 0.0),
    "vp": Preset("vp", "VP", StructuralParams(1.25, 0.0, -0.25), 0.1, 1.0),
}

# Parameters and seed of the invariant-circle example; the seed is listed with
# the most recent coordinate last, i.e. as (x_{t-2}, x_{t-1}, x_t).
CIRCLE_PARAMS = StructuralParams(0.5, 0.0, 0.5)
CIRCLE_SIGMA = -0.3
CIRCLE_DELTA = 0.5
CIRCLE_ALPHA = -1.0
CIRCLE_SEED = (-0.7222, -1.4040, 0.1022)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
