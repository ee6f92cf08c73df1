"""The quadratic map, its parameters, and the rescaled difference equation.

The map is ``L(x, y, z) = (delta*z + G(x, y), x, y)`` with
``G(x, y) = alpha - sigma*y + a*x**2 + b*x*y + c*y**2`` under the normalization
``a + b + c = 1`` (the linear ``x`` coefficient is fixed to zero). Scaling
``xi = eps*x`` with ``alpha = -1/eps**2`` turns orbits into zeros of the
difference residual

    Q(xi_t, xi_{t-1}) - 1 - eps*(xi_{t+1} + sigma*xi_{t-1} - delta*xi_{t-2}).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DegenerateParamsError, NotEmbeddableError

NORMALIZATION_TOL = 1e-12
DISCRIMINANT_TOL = 1e-10


class ConicClass(enum.Enum):
    PARALLEL_LINES = "ParallelLines"
    ELLIPSE = "Ellipse"
    HYPERBOLA = "Hyperbola"


@dataclass(frozen=True)
class StructuralParams:
    """Coefficients of the quadratic form ``Q(x, y) = a x^2 + b xy + c y^2``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c)
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateParamsError(f"non-finite coefficients {vals}")
        if abs(self.a + self.b + self.c - 1.0) > NORMALIZATION_TOL:
            raise DegenerateParamsError(
                f"a + b + c = {self.a + self.b + self.c!r}, expected 1"
            )

    @classmethod
    def from_ac(cls, a: float, c: float) -> "StructuralParams":
        return cls(a, 1.0 - a - c, c)

    @classmethod
    def from_slope(cls, m: float) -> "StructuralParams":
        return from_slope(m)

    @property
    def discriminant(self) -> float:
        return self.b * self.b - 4.0 * self.a * self.c

    @property
    def conic(self) -> ConicClass:
        return classify(self)

    @property
    def slope(self) -> float:
        """Slope ``m = -b/(2a)`` of the parallel lines (meaningful when Delta = 0)."""
        if self.a == 0.0:
            raise DegenerateParamsError("slope undefined for a = 0")
        return -self.b / (2.0 * self.a)

    def swapped(self) -> "StructuralParams":
        """Exchange ``a`` and ``c``; the backward branch maps are the forward maps of this."""
        return StructuralParams(self.c, self.b, self.a)


@dataclass(frozen=True)
class UnfoldingParams:
    sigma: float
    delta: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise DegenerateParamsError("epsilon must be nonnegative")

    def alpha(self) -> float:
        if self.epsilon == 0.0:
            raise DegenerateParamsError("alpha = -1/eps^2 is undefined at eps = 0")
        return -1.0 / self.epsilon**2

    def gamma(self) -> float:
        return abs(self.epsilon) * (1.0 + abs(self.sigma) + abs(self.delta))

    def with_epsilon(self, epsilon: float) -> "UnfoldingParams":
        return UnfoldingParams(self.sigma, self.delta, epsilon)


class State3(NamedTuple):
    x: float
    y: float
    z: float


class SymbolSequence:
    """One period of a two-symbol word, stored as an int8 array of +/-1.

    Parsed from and printed as strings over ``-`` and ``+``.
    """

    __slots__ = ("_word",)

    def __init__(self, word):
        if isinstance(word, str):
            word = parse_word(word)
        arr = np.asarray(word)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a symbol word needs at least one symbol")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("symbols must be +1 or -1")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        self._word = arr

    @property
    def word(self) -> np.ndarray:
        return self._word

    @property
    def period(self) -> int:
        return int(self._word.size)

    def __len__(self):
        return self.period

    def __iter__(self):
        return iter(int(s) for s in self._word)

    def __getitem__(self, t):
        return int(self._word[t % self.period])

    def __eq__(self, other):
        if isinstance(other, str):
            other = SymbolSequence(other)
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return np.array_equal(self._word, other._word)

    def __hash__(self):
        return hash(self._word.tobytes())

    def __neg__(self):
        return SymbolSequence(-self._word)

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in self._word)

    def __repr__(self):
        return f"SymbolSequence({str(self)!r})"

    def as_float(self) -> np.ndarray:
        return self._word.astype(float)

    def rotated(self, k: int) -> "SymbolSequence":
        """Shift so that the result starts at index ``k``."""
        return SymbolSequence(np.roll(self._word, -k))

    def reversed(self) -> "SymbolSequence":
        return SymbolSequence(self._word[::-1])

    def doubled(self) -> "SymbolSequence":
        return SymbolSequence(np.concatenate([self._word, self._word]))

    def to_list(self) -> list[int]:
        return [int(s) for s in self._word]


def parse_word(text: str) -> np.ndarray:
    text = text.strip().strip("{}()[]").replace(",", "").replace(" ", "")
    if not text or set(text) - {"+", "-"}:
        raise ValueError(f"word must consist of '+' and '-' characters, got {text!r}")
    return np.array([1 if ch == "+" else -1 for ch in text], dtype=np.int8)


# ---------------------------------------------------------------------------
# operations


def quadratic_form(p: StructuralParams, x, y):
    return p.a * x * x + p.b * x * y + p.c * y * y


def classify(p: StructuralParams) -> ConicClass:
    disc = p.discriminant
    if abs(disc) <= DISCRIMINANT_TOL:
        return ConicClass.PARALLEL_LINES
    return ConicClass.ELLIPSE if disc < 0 else ConicClass.HYPERBOLA


def from_slope(m: float) -> StructuralParams:
    """Parallel-lines coefficients ``(1, -2m, m^2)/(1-m)^2`` for slope ``m``."""
    if m == 1.0:
        raise DegenerateParamsError("slope m = 1 does not give a normalized quadratic")
    k = (1.0 - m) ** 2
    a, b, c = 1.0 / k, -2.0 * m / k, m * m / k
    # absorb the last-bit rounding into a so that the normalization holds exactly
    return StructuralParams(1.0 - b - c, b, c)


def asymptote_slopes(p: StructuralParams) -> tuple[float, float]:
    disc = p.discriminant
    if disc < 0 and abs(disc) > DISCRIMINANT_TOL:
        raise DegenerateParamsError("an ellipse has no real asymptotes")
    if p.a == 0.0:
        raise DegenerateParamsError("asymptote slopes need a != 0")
    root = math.sqrt(max(disc, 0.0))
    return (-p.b + root) / (2.0 * p.a), (-p.b - root) / (2.0 * p.a)


def map_step(p: StructuralParams, u: UnfoldingParams, alpha: float, s) -> State3:
    x, y, z = s
    g = alpha - u.sigma * y + quadratic_form(p, x, y)
    return State3(u.delta * z + g, x, y)


def iterate_map(p: StructuralParams, u: UnfoldingParams, alpha: float, seed, n_steps: int) -> np.ndarray:
    """Trajectory of ``n_steps`` applications of the unscaled map; row 0 is the seed."""
    x0 = np.asarray(seed, dtype=float)
    return kernels.map_orbit(p.a, p.b, p.c, u.sigma, u.delta, float(alpha), x0, int(n_steps))


def residual_L(p: StructuralParams, u: UnfoldingParams, xi_next, xi_t, xi_prev, xi_prev2):
    lin = xi_next + u.sigma * xi_prev - u.delta * xi_prev2
    return quadratic_form(p, xi_t, xi_prev) - 1.0 - u.epsilon * lin


def residual_orbit(p: StructuralParams, u: UnfoldingParams, xi) -> np.ndarray:
    """Residual at every index of a periodic sequence (cyclic indexing)."""
    xi = np.ascontiguousarray(xi, dtype=float)
    out = np.empty_like(xi)
    return kernels.residual(p.a, p.b, p.c, u.sigma, u.delta, u.epsilon, xi, out)


def scale_orbit(x, epsilon: float) -> np.ndarray:
    return epsilon * np.asarray(x, dtype=float)


def unscale_orbit(xi, epsilon: float) -> np.ndarray:
    if epsilon == 0.0:
        raise DegenerateParamsError("cannot unscale at eps = 0")
    return np.asarray(xi, dtype=float) / epsilon


def henon_embed_check(sigma: float, alpha: float, n_steps: int, seed,
                      p: StructuralParams | None = None, delta: float = 0.0) -> float:
    """Largest one-step conjugacy defect between the 3D map and the Henon map.

    With ``(a, b, c) = (1, 0, 0)`` and ``delta = 0`` the ``(x, y)`` part of the
    3D map is conjugate to ``(X', Y') = (Y - k + X^2, -delta_H X)`` through
    ``(X, Y) = (x, -sigma*y)``, ``k = -alpha``, ``delta_H = sigma``. Along the
    3D orbit of ``seed``, each Henon step is applied to the conjugated state and
    compared with the conjugated next state (relative to the state size).
    Comparing two free-running orbits would only measure rounding growth on a
    chaotic set. Iteration stops early if the orbit leaves the floats.
    """
    p = StructuralParams(1.0, 0.0, 0.0) if p is None else p
    if p.b != 0.0 or p.c != 0.0 or p.a != 1.0 or delta != 0.0:
        raise NotEmbeddableError("the Henon embedding needs (a, b, c) = (1, 0, 0) and delta = 0")
    k, dh = -alpha, sigma
    traj = iterate_map(p, UnfoldingParams(sigma, 0.0), alpha, seed, n_steps)
    big_x = traj[:, 0]
    big_y = -sigma * traj[:, 1]
    with np.errstate(all="ignore"):
        hx = big_y[:-1] - k + big_x[:-1] ** 2
        hy = -dh * big_x[:-1]
        scale = np.maximum(1.0, np.maximum(np.abs(big_x[1:]), np.abs(big_y[1:])))
        err = np.maximum(np.abs(hx - big_x[1:]), np.abs(hy - big_y[1:])) / scale
    ok = np.isfinite(err) & np.isfinite(scale)
    if not ok.all():
        err = err[: np.argmin(ok)]
    return float(err.max()) if err.size else 0.0
