"""Continuation of AI states to eps > 0 by contraction.

Solving the rescaled difference equation for ``xi_t`` gives an operator
``T(xi; s)`` on periodic sequences whose fixed points are orbits. Two special
cases carry sufficient conditions for ``T`` to be a contraction on a cube:

* vanishing ``b`` -- cube ``||xi - s||_inf <= M`` around the word,
* parallel lines (``Delta = 0``) -- cube ``||xi||_inf <= x* + M``.

Both sets of conditions bound the lumped size ``gamma = eps (1 + |sigma| + |delta|)``
of the eps-dependent terms, and maximizing the admissible ``gamma`` over ``M``
gives ``eps_N``, below which every word continues uniquely.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ai_limit import ai_state, x_star
from .core import (
    DISCRIMINANT_TOL,
    StructuralParams,
    SymbolSequence,
    UnfoldingParams,
    residual_orbit,
)
from .errors import (
    ConvergenceError,
    DegenerateParamsError,
    OffCurveError,
    UnsupportedCaseError,
)

VANISHING_B_TOL = 1e-12


class CaseKind(enum.Enum):
    GENERAL_T = "GeneralT"
    VANISHING_B = "VanishingB"
    PARALLEL_LINES = "ParallelLines"


@dataclass(frozen=True)
class PersistenceCase:
    kind: CaseKind
    p: StructuralParams
    u: UnfoldingParams
    M: float = 0.0
    x_star: float = math.nan

    def __post_init__(self):
        if self.M < 0.0:
            raise DegenerateParamsError("M must be nonnegative")
        if self.kind is CaseKind.VANISHING_B and abs(self.p.b) > VANISHING_B_TOL:
            raise DegenerateParamsError("the vanishing-b operator needs b = 0")
        if self.kind is CaseKind.PARALLEL_LINES and abs(self.p.discriminant) > DISCRIMINANT_TOL:
            raise DegenerateParamsError("the parallel-lines operator needs Delta = 0")

    @property
    def gamma(self) -> float:
        return gamma(self.u)


@dataclass(frozen=True)
class RegionMVerdict:
    in_region: bool
    gamma_bound: float
    binding_constraint: str


@dataclass(frozen=True)
class EpsilonNResult:
    epsilon_n: float
    M: float
    gamma_bound: float
    binding_constraint: str


def gamma(u: UnfoldingParams) -> float:
    return u.gamma()


def detect_kind(p: StructuralParams) -> CaseKind:
    # b = 0 wins over Delta = 0: (1, 0, 0) is analysed with the cube around s
    if abs(p.b) <= VANISHING_B_TOL:
        return CaseKind.VANISHING_B
    if abs(p.discriminant) <= DISCRIMINANT_TOL:
        return CaseKind.PARALLEL_LINES
    return CaseKind.GENERAL_T


def make_case(p: StructuralParams, u: UnfoldingParams, M: float = 0.0,
              kind: CaseKind | None = None) -> PersistenceCase:
    kind = detect_kind(p) if kind is None else kind
    try:
        xs = x_star(p)
    except DegenerateParamsError:
        xs = math.nan
    return PersistenceCase(kind, p, u, M, xs)


# ---------------------------------------------------------------------------
# operators


def _apply(kind_code, pc: PersistenceCase, s, xi, m=0.0):
    s = s if isinstance(s, SymbolSequence) else SymbolSequence(s)
    xi = np.ascontiguousarray(xi, dtype=float)
    out = np.empty_like(xi)
    p, u = pc.p, pc.u
    bad = kernels.t_apply(kind_code, p.a, p.b, p.c, m, u.sigma, u.delta, u.epsilon,
                          s.as_float(), xi, out)
    if bad >= 0:
        raise OffCurveError(f"negative radicand at index {bad}", index=int(bad))
    return out


def operator_T(pc: PersistenceCase, s, xi) -> np.ndarray:
    if pc.p.a == 0.0:
        raise DegenerateParamsError("the operator T needs a != 0")
    return _apply(kernels.KIND_GENERAL, pc, s, xi)


def operator_T0(pc: PersistenceCase, s, xi) -> np.ndarray:
    if abs(pc.p.b) > VANISHING_B_TOL or not pc.p.a > 0.0:
        raise DegenerateParamsError("T0 needs b = 0 and a > 0")
    return _apply(kernels.KIND_VANISHING_B, pc, s, xi)


def operator_Tpar(pc: PersistenceCase, s, xi) -> np.ndarray:
    if abs(pc.p.discriminant) > DISCRIMINANT_TOL:
        raise DegenerateParamsError("the parallel-lines operator needs Delta = 0")
    m = pc.p.slope
    if m == 1.0:
        raise DegenerateParamsError("slope m = 1")
    return _apply(kernels.KIND_PARALLEL, pc, s, xi, m)


_KIND_CODES = {
    CaseKind.GENERAL_T: kernels.KIND_GENERAL,
    CaseKind.VANISHING_B: kernels.KIND_VANISHING_B,
    CaseKind.PARALLEL_LINES: kernels.KIND_PARALLEL,
}


def apply_operator(pc: PersistenceCase, s, xi) -> np.ndarray:
    return {
        CaseKind.GENERAL_T: operator_T,
        CaseKind.VANISHING_B: operator_T0,
        CaseKind.PARALLEL_LINES: operator_Tpar,
    }[pc.kind](pc, s, xi)


# ---------------------------------------------------------------------------
# region bounds


def vanishing_b_bounds(a: float, c: float, M: float, main_text: bool = False) -> dict[str, float]:
    """Upper bounds on gamma for T0 to map the cube into itself and contract.

    ``main_text=True`` swaps the two mapping bounds for the single combined
    inequality quoted alongside the operator; it admits no eps > 0 when a = 1
    and is kept only for comparison.
    """
    aa, ac = abs(a), abs(c)
    if main_text:
        maps = (min(a - 1.0, 1.0 - a * (1.0 - M) ** 2) / (1.0 + M)
                - abs(1.0 - a) * (1.0 + M))
        bounds = {"maps_into": maps}
    else:
        bounds = {
            "maps_into_upper": ((aa - ac) * (1.0 + M) ** 2 - 1.0) / (1.0 + M),
            "maps_into_lower": (1.0 - aa * (1.0 - M) ** 2 - ac * (1.0 + M) ** 2) / (1.0 + M),
        }
    bounds["contraction"] = 2.0 * aa * (1.0 - M) - 2.0 * ac * (1.0 + M)
    return bounds


def parallel_lines_bounds(m: float, xs: float, M: float) -> dict[str, float]:
    X = xs + M
    one_m, abs_m = (1.0 - m) ** 2, (1.0 - abs(m)) ** 2
    maps = (abs_m * X * X - one_m) / (one_m * X)
    # positive root of one_m*g^2 + 4*abs_m*X*g - 4*abs_m = 0
    qb = 4.0 * abs_m * X
    contraction = (-qb + math.sqrt(qb * qb + 16.0 * one_m * abs_m)) / (2.0 * one_m)
    return {"maps_into": maps, "contraction": contraction, "radical": 1.0 / X}


def _bounds(pc_kind: CaseKind, p: StructuralParams, M: float, main_text=False) -> dict[str, float]:
    if pc_kind is CaseKind.VANISHING_B:
        return vanishing_b_bounds(p.a, p.c, M, main_text)
    if pc_kind is CaseKind.PARALLEL_LINES:
        return parallel_lines_bounds(p.slope, x_star(p), M)
    raise UnsupportedCaseError("no persistence region is known for general b and Delta")


def region_M_check(pc: PersistenceCase, main_text: bool = False) -> RegionMVerdict:
    bounds = _bounds(pc.kind, pc.p, pc.M, main_text)
    binding = min(bounds, key=bounds.get)
    bound = bounds[binding]
    return RegionMVerdict(bool(gamma(pc.u) < bound), float(bound), binding)


def _golden_max(f, lo, hi, resolution):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > resolution:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def epsilon_N_search(p: StructuralParams, sigma: float, delta: float,
                     main_text: bool = False, resolution: float = 1e-6,
                     grid: int = 1000) -> EpsilonNResult:
    """Maximize the admissible gamma over the cube size M and convert to eps."""
    kind = detect_kind(p)
    if kind is CaseKind.GENERAL_T:
        raise UnsupportedCaseError("eps_N is only available for b = 0 or Delta = 0")
    m_hi = 1.0 if kind is CaseKind.VANISHING_B else 10.0

    def bound(M):
        return min(_bounds(kind, p, M, main_text).values())

    ms = np.linspace(0.0, m_hi, grid + 1)[1:-1]
    vals = np.array([bound(M) for M in ms])
    k = int(np.argmax(vals))
    if vals[k] <= 0.0:
        return EpsilonNResult(0.0, float(ms[k]), float(vals[k]), "empty")
    lo, hi = ms[max(k - 1, 0)], ms[min(k + 1, len(ms) - 1)]
    M = _golden_max(bound, lo, hi, resolution)
    bounds = _bounds(kind, p, M, main_text)
    binding = min(bounds, key=bounds.get)
    g = bounds[binding]
    return EpsilonNResult(float(g / (1.0 + abs(sigma) + abs(delta))), float(M), float(g), binding)


def epsilon_N(p: StructuralParams, sigma: float, delta: float, main_text: bool = False) -> float:
    return epsilon_N_search(p, sigma, delta, main_text).epsilon_n


def henon_horseshoe_epsilon(delta_h: float) -> float:
    """Largest eps with no bifurcations of the Henon map of Jacobian ``delta_h``.

    This is the classical horseshoe bound 2*sqrt(1 - 2/sqrt(5)) / (1 + 2|delta_h|),
    kept separate from the contraction bound above.
    """
    return 2.0 * math.sqrt(1.0 - 2.0 / math.sqrt(5.0)) / (1.0 + 2.0 * abs(delta_h))


# ---------------------------------------------------------------------------
# orbit solving


def solve_orbit_contraction(pc: PersistenceCase, s, tol: float = 1e-12,
                            max_iter: int = 100_000, override: bool = False,
                            xi0=None) -> np.ndarray:
    """Fixed point of the case operator, started from the AI state of ``s``.

    The region certificate is enforced unless ``override`` is set; for the
    general operator there is no certificate and ``override`` is mandatory.
    """
    s = s if isinstance(s, SymbolSequence) else SymbolSequence(s)
    if pc.kind is CaseKind.GENERAL_T:
        if not override:
            raise UnsupportedCaseError("general-b persistence has no contraction certificate; pass override=True")
    elif not override:
        verdict = region_M_check(pc)
        if not verdict.in_region:
            raise UnsupportedCaseError(
                f"gamma = {pc.gamma:.6g} is not below the bound {verdict.gamma_bound:.6g} at M = {pc.M}"
            )
    start = ai_state(pc.p, s, tol=tol, force=override) if xi0 is None else np.asarray(xi0, dtype=float)
    if pc.u.epsilon == 0.0 and xi0 is None:
        return start
    p, u = pc.p, pc.u
    m = p.slope if pc.kind is CaseKind.PARALLEL_LINES else 0.0
    word = s.as_float()
    xi = np.ascontiguousarray(start, dtype=float)
    step_tol = tol
    for _ in range(4):
        xi, iters, status, bad = kernels.t_iterate(
            _KIND_CODES[pc.kind], p.a, p.b, p.c, m, u.sigma, u.delta, u.epsilon,
            word, xi, step_tol, max_iter,
        )
        if status == kernels.STATUS_NEG_RADICAND:
            raise OffCurveError(f"negative radicand at index {bad}", index=int(bad))
        if status == kernels.STATUS_MAX_ITER:
            raise ConvergenceError(f"contraction did not converge in {max_iter} iterations")
        if np.max(np.abs(residual_orbit(p, u, xi))) < 10.0 * tol:
            return xi
        # slow contraction: successive distance overstates accuracy
        step_tol /= 10.0
    raise ConvergenceError("fixed point does not pass the residual audit")


def empirical_lipschitz(pc: PersistenceCase, s, n_pairs: int = 100, rng=None) -> float:
    """Largest observed ``||T xi - T eta|| / ||xi - eta||`` over random cube pairs."""
    rng = np.random.default_rng(rng)
    s = s if isinstance(s, SymbolSequence) else SymbolSequence(s)
    n = s.period
    worst = 0.0
    for _ in range(n_pairs):
        if pc.kind is CaseKind.VANISHING_B:
            xi = s.as_float() + pc.M * rng.uniform(-1, 1, n)
            eta = s.as_float() + pc.M * rng.uniform(-1, 1, n)
        else:
            r = pc.x_star + pc.M
            xi, eta = r * rng.uniform(-1, 1, n), r * rng.uniform(-1, 1, n)
        num = np.max(np.abs(apply_operator(pc, s, xi) - apply_operator(pc, s, eta)))
        worst = max(worst, num / np.max(np.abs(xi - eta)))
    return worst
