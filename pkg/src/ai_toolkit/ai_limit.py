"""The eps = 0 layer: branch maps of the correspondence Q(xi_t, xi_{t-1}) = 1.

Solving ``Q(xi_t, xi_{t-1}) = 1`` for ``xi_t`` gives two branches

    f_s(x) = (-b x + s sqrt(Delta x^2 + 4a)) / (2a),   s = +/-1,

and a symbol word selects one branch per time step. Where both branches map an
interval ``B = [-x*, x*]`` into itself with slope below one in magnitude (the
region R+), the sequence map ``F_t(xi) = f_{s_t}(xi_{t-1})`` is a contraction
and each word has exactly one AI state in ``B``. The backward maps (region R-)
are the forward maps of the parameters with ``a`` and ``c`` exchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ConicClass, StructuralParams, SymbolSequence, classify, quadratic_form
from .errors import (
    AmbiguousSymbolError,
    ConvergenceError,
    DegenerateParamsError,
    OffCurveError,
    UnsupportedCaseError,
)

REGION_SAFETY = 1e-12
AMBIGUOUS_SYMBOL_TOL = 1e-12
GOLDEN_SPLIT = 0.5 * (math.sqrt(5.0) - 1.0)


class Direction(enum.Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"


class Region(enum.Enum):
    R_PLUS = "RPlus"
    R_MINUS = "RMinus"
    NEITHER = "Neither"


@dataclass(frozen=True)
class BranchMaps:
    params: StructuralParams
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        lead = self.params.a if self.direction is Direction.FORWARD else self.params.c
        if lead == 0.0:
            raise DegenerateParamsError(
                f"{self.direction.value} branch maps need a nonzero leading coefficient"
            )

    @property
    def effective(self) -> StructuralParams:
        """Parameters whose forward maps these are."""
        if self.direction is Direction.FORWARD:
            return self.params
        return self.params.swapped()


@dataclass(frozen=True)
class TrustInterval:
    x_star: float
    M: float = 0.0

    def __post_init__(self):
        if not self.x_star > 0.0:
            raise DegenerateParamsError("x* must be positive")
        if self.M < 0.0:
            raise DegenerateParamsError("M must be nonnegative")


@dataclass(frozen=True)
class RegionVerdict:
    in_region: bool
    which: Region
    margin: float


def _radicand(p: StructuralParams, xi):
    return p.discriminant * xi * xi + 4.0 * p.a


def branch_map(bm: BranchMaps, s: int, xi):
    """Evaluate ``f_s`` (or ``g_s`` for a backward ``bm``) at ``xi``."""
    p = bm.effective
    xi_arr = np.asarray(xi, dtype=float)
    rad = _radicand(p, xi_arr)
    if np.any(rad < 0.0):
        raise OffCurveError(f"negative radicand at xi = {xi!r}")
    out = (-p.b * xi_arr + s * np.sqrt(rad)) / (2.0 * p.a)
    return float(out) if out.ndim == 0 else out


def branch_derivative(bm: BranchMaps, s: int, xi):
    p = bm.effective
    xi_arr = np.asarray(xi, dtype=float)
    rad = _radicand(p, xi_arr)
    if np.any(rad <= 0.0):
        raise OffCurveError(f"derivative undefined where the radicand vanishes (xi = {xi!r})")
    out = -p.b / (2.0 * p.a) + s * p.discriminant * xi_arr / (2.0 * p.a * np.sqrt(rad))
    return float(out) if out.ndim == 0 else out


def x_star(p: StructuralParams) -> float:
    """Half-width of the forward-invariant interval ``B``."""
    conic = classify(p)
    if conic is ConicClass.ELLIPSE:
        if not 0.0 < p.c < p.a:
            raise DegenerateParamsError("elliptic x* needs 0 < c < a (range inside domain)")
        return 2.0 * math.sqrt(p.c / abs(p.discriminant))
    if p.b <= 0.0:
        return 1.0
    if p.b < 0.5:
        return 1.0 / math.sqrt(1.0 - 2.0 * p.b)
    raise DegenerateParamsError("x* needs b < 1/2 (no period-two intersection otherwise)")


def trust_interval(p: StructuralParams, M: float = 0.0) -> TrustInterval:
    return TrustInterval(x_star(p), M)


def elliptic_upper_bound(a: float) -> float:
    """Upper bound on ``c`` for forward contraction of an elliptic correspondence."""
    if a <= 0.25:
        return -math.inf
    low = (1.0 - a + 2.0 * math.sqrt(max(16.0 * a * a - 11.0 * a + 2.0, 0.0))) / 7.0
    high = a + 3.0 - 2.0 * math.sqrt(a + 2.0)
    if a < GOLDEN_SPLIT:
        return low
    if a > GOLDEN_SPLIT:
        return high
    return min(low, high)


def _forward_slacks(p: StructuralParams) -> list[float]:
    """Slacks of the R+ inequalities; all positive iff the forward maps contract on B."""
    a, b, c = p.a, p.b, p.c
    conic = classify(p)
    if a <= 0.0:
        return [-math.inf]
    if conic is ConicClass.PARALLEL_LINES:
        return [1.0 - abs(b / (2.0 * a)), 0.5 - b]
    lower_curve = a - 2.0 * math.sqrt(a) + 1.0
    if conic is ConicClass.ELLIPSE:
        return [c - lower_curve, elliptic_upper_bound(a) - c, c, a - c]
    # |m+-| < 1 also forces |c| < a, which the strip alone misses for a < 1/4
    return [c - (0.5 - a), lower_curve - c, a - abs(c)]


def region_check(p: StructuralParams) -> RegionVerdict:
    fwd = min(_forward_slacks(p)) - REGION_SAFETY
    if fwd > 0.0:
        return RegionVerdict(True, Region.R_PLUS, fwd)
    bwd = min(_forward_slacks(p.swapped())) - REGION_SAFETY
    if bwd > 0.0:
        return RegionVerdict(True, Region.R_MINUS, bwd)
    return RegionVerdict(False, Region.NEITHER, max(fwd, bwd))


def initial_guess(p: StructuralParams, s: SymbolSequence) -> np.ndarray:
    """The word itself, clipped to ``B`` when ``x*`` is defined."""
    guess = s.as_float()
    try:
        xs = x_star(p)
    except DegenerateParamsError:
        return guess
    return np.clip(guess, -xs, xs)


def _iterate_forward(p, word, xi0, tol, max_iter):
    xi, iters, status, bad = kernels.t_iterate(
        kernels.KIND_GENERAL, p.a, p.b, p.c, 0.0, 0.0, 0.0, 0.0,
        np.ascontiguousarray(word, dtype=float), np.ascontiguousarray(xi0, dtype=float),
        tol, max_iter,
    )
    if status == kernels.STATUS_NEG_RADICAND:
        raise OffCurveError(f"branch map left the curve at index {bad}", index=int(bad))
    if status == kernels.STATUS_MAX_ITER:
        raise ConvergenceError(f"AI-state iteration did not converge in {max_iter} steps")
    return xi


def _to_backward(seq):
    # eta_k = xi_{-k}; the word is reversed and shifted by one: r_k = s_{1-k}
    n = len(seq)
    return np.asarray(seq)[(-np.arange(n)) % n], np.asarray(seq)[(1 - np.arange(n)) % n]


def ai_state(p: StructuralParams, s, tol: float = 1e-12, max_iter: int = 100_000,
             direction: Direction | None = None, xi0=None, force: bool = False) -> np.ndarray:
    """Unique AI state of the word ``s`` by fixed-point iteration of the branch maps.

    ``direction`` defaults to the region the parameters lie in. Outside both
    regions a :class:`UnsupportedCaseError` is raised unless ``force`` is set,
    in which case the forward iteration is attempted without any guarantee.
    """
    s = s if isinstance(s, SymbolSequence) else SymbolSequence(s)
    if direction is None:
        verdict = region_check(p)
        if not verdict.in_region and not force:
            raise UnsupportedCaseError(
                f"(a, c) = ({p.a}, {p.c}) lies outside both contraction regions"
            )
        direction = Direction.BACKWARD if verdict.which is Region.R_MINUS else Direction.FORWARD
    if direction is Direction.FORWARD:
        xi = initial_guess(p, s) if xi0 is None else np.asarray(xi0, dtype=float)
    else:
        guess = initial_guess(p.swapped(), s) if xi0 is None else np.asarray(xi0, dtype=float)
        eta, _ = _to_backward(guess)
        _, rword = _to_backward(s.word)
    step_tol = tol
    for _ in range(4):
        if direction is Direction.FORWARD:
            xi = _iterate_forward(p, s.word, xi, step_tol, max_iter)
        else:
            eta = _iterate_forward(p.swapped(), rword, eta, step_tol, max_iter)
            xi, _ = _to_backward(eta)
        defect = np.max(np.abs(quadratic_form(p, xi, np.roll(xi, 1)) - 1.0))
        if defect < max(10.0 * tol, 1e-14):
            return xi
        # slopes near one: the step size understates the remaining error
        step_tol /= 10.0
    raise ConvergenceError(f"AI state misses the curve by {defect:.3e}")


def extract_symbols(p: StructuralParams, xi, direction: Direction = Direction.FORWARD) -> SymbolSequence:
    """Recover the branch choices of a sequence: ``s_t = sign(2a xi_t + b xi_{t-1})``."""
    xi = np.asarray(xi, dtype=float)
    prev = np.roll(xi, 1)
    if direction is Direction.FORWARD:
        if p.a == 0.0:
            raise DegenerateParamsError("forward symbols need a != 0")
        arg = 2.0 * p.a * xi + p.b * prev
    else:
        if p.c == 0.0:
            raise DegenerateParamsError("backward symbols need c != 0")
        arg = 2.0 * p.c * prev + p.b * xi
    flat = np.flatnonzero(np.abs(arg) < AMBIGUOUS_SYMBOL_TOL)
    if flat.size:
        raise AmbiguousSymbolError(f"symbol at index {flat[0]} is ambiguous", index=int(flat[0]))
    return SymbolSequence(np.where(arg > 0, 1, -1))
