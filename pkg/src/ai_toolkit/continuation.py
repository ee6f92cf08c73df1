"""Pseudo-arclength continuation of periodic orbits in eps.

A period-n orbit is a zero of ``G(xi, eps)`` (the difference residual at each
index). Starting from the AI state at eps = 0, branches ``y = (xi, eps)`` are
traced with a tangent predictor and a Broyden corrector on the bordered system

    G(y) = 0,   tau_k . (y - y_k) = ell.

Folds show up as sign changes of the eps-component of the tangent; period
doublings as a real monodromy multiplier crossing -1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from . import kernels
from .ai_limit import ai_state, extract_symbols
from .core import StructuralParams, SymbolSequence
from .errors import (
    AmbiguousSymbolError,
    AIToolkitError,
    ConvergenceError,
    DegenerateParamsError,
    SingularSystemError,
)
from .linalg import broyden_update, eig_log, qr_factor, solve

INITIAL_EPS_DOT = 0.005
PQR_MAX_CYCLES = 200
PQR_TOL = 1e-12
SEPARATION_TOL = 1e-10
# residual growth (sup norm, per iteration) that triggers a fresh factorization
GROWTH_REFACTOR = 10.0


class Flag(enum.Enum):
    CONVERGED = "Converged"
    FOLD = "Fold"
    PERIOD_DOUBLING = "PeriodDoubling"


class EventKind(enum.Enum):
    SADDLE_NODE = "SaddleNode"
    PERIOD_DOUBLING = "PeriodDoubling"


@dataclass(frozen=True)
class ResidualSystem:
    p: StructuralParams
    sigma: float
    delta: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("period must be at least 1")

    def with_period(self, n: int) -> "ResidualSystem":
        return replace(self, n=n)


@dataclass
class ContinuationOptions:
    eps_max: float = 2.0
    eps_min: float = 0.0
    ell0: float = 0.01
    ell_min: float = 1e-10
    tol: float = 1e-12
    max_iter: int = 150
    refactor_every: int = 30
    jump_factor: float = 10.0
    max_steps: int = 20_000
    stop_at_first_fold: bool = False
    first_step: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class BranchPoint:
    epsilon: float
    xi: np.ndarray
    tangent: np.ndarray
    log_multipliers: np.ndarray
    flags: frozenset

    @property
    def multipliers(self) -> np.ndarray:
        return multipliers_from_log(self.log_multipliers)


@dataclass(frozen=True)
class BifurcationEvent:
    kind: EventKind
    epsilon: float
    orbit: np.ndarray
    partner_word: SymbolSequence | None = None
    index: int = -1
    certificate: float = math.nan


@dataclass
class BranchRecord:
    p: StructuralParams
    sigma: float
    delta: float
    word: SymbolSequence
    points: list = field(default_factory=list)
    events: list = field(default_factory=list)
    termination: str = ""
    options: dict = field(default_factory=dict)

    @property
    def system(self) -> ResidualSystem:
        return ResidualSystem(self.p, self.sigma, self.delta, self.word.period)

    @property
    def max_epsilon(self) -> float:
        return max((pt.epsilon for pt in self.points), default=0.0)

    def epsilons(self) -> np.ndarray:
        return np.array([pt.epsilon for pt in self.points])


# ---------------------------------------------------------------------------
# residual system


def residual(sys: ResidualSystem, xi, epsilon: float) -> np.ndarray:
    xi = np.ascontiguousarray(xi, dtype=float)
    p = sys.p
    return kernels.residual(p.a, p.b, p.c, sys.sigma, sys.delta, float(epsilon), xi, np.empty_like(xi))


def jacobian(sys: ResidualSystem, xi, epsilon: float) -> np.ndarray:
    """Analytic ``n x (n+1)`` Jacobian; the last column is the eps derivative."""
    xi = np.ascontiguousarray(xi, dtype=float)
    p = sys.p
    out = np.zeros((xi.size, xi.size + 1))
    return kernels.jacobian(p.a, p.b, p.c, sys.sigma, sys.delta, float(epsilon), xi, out)


def _bordered(sys, y, tau):
    n = sys.n
    m = np.empty((n + 1, n + 1))
    m[:n] = jacobian(sys, y[:n], y[n])
    m[n] = tau
    return m


def initial_tangent(sys: ResidualSystem, xi0, eps_dot: float = INITIAL_EPS_DOT) -> np.ndarray:
    """Unit tangent at eps = 0 with a positive eps-component."""
    xi0 = np.asarray(xi0, dtype=float)
    J = jacobian(sys, xi0, 0.0)
    try:
        xi_dot = solve(qr_factor(J[:, :-1]), -J[:, -1] * eps_dot)
    except SingularSystemError as exc:
        raise SingularSystemError(f"degenerate start: {exc}") from exc
    tau = np.append(xi_dot, eps_dot)
    return tau / np.linalg.norm(tau)


def tangent(sys: ResidualSystem, y, tau_prev) -> np.ndarray:
    """Solve ``[G_y; tau_prev] t = e_{n+1}`` and normalize (keeps orientation)."""
    rhs = np.zeros(sys.n + 1)
    rhs[-1] = 1.0
    try:
        t = sla.solve(_bordered(sys, y, tau_prev), rhs, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"bordered tangent system is singular: {exc}") from exc
    if not np.all(np.isfinite(t)):
        raise SingularSystemError("bordered tangent system is singular")
    return t / np.linalg.norm(t)


# ---------------------------------------------------------------------------
# multipliers


def _block_log_eigs(P, rs, lo, hi):
    """Eigenvalues of the diagonal block ``[lo, hi)`` of ``P * R_{n-1} ... R_0``."""
    m = np.eye(hi - lo)
    log_scale = 0.0
    for r in rs:
        m = r[lo:hi, lo:hi] @ m
        s = np.max(np.abs(m))
        if s == 0.0:
            return np.full(hi - lo, complex(-math.inf, 0.0))
        m /= s
        log_scale += math.log(s)
    return eig_log(P[lo:hi, lo:hi] @ m, log_scale)


def log_multipliers(sys: ResidualSystem, xi, epsilon: float) -> np.ndarray:
    """Monodromy multipliers as ``log|lambda| + i arg(lambda)``, largest first.

    The period product of transfer matrices overflows for long orbits, so it
    is never formed. Orthogonal iteration through the period gives
    ``A_t Q_{t-1} = Q_t R_t``; at convergence the monodromy is similar to
    ``P R_{n-1} ... R_0`` with ``P = Q_in^T Q_out`` block upper triangular.
    Separated multipliers are ``P_ii prod R_t[ii]``; blocks that do not separate
    (complex pairs, equal moduli) are resolved by a scaled product.
    """
    if epsilon == 0.0:
        raise DegenerateParamsError("multipliers are undefined at eps = 0")
    xi = np.ascontiguousarray(xi, dtype=float)
    p = sys.p
    q_in, q_out, rs, _ = kernels.periodic_qr(p.a, p.b, p.c, sys.sigma, sys.delta, float(epsilon),
                                             xi, PQR_MAX_CYCLES, PQR_TOL)
    P = q_in.T @ q_out
    tied = [abs(P[1, 0]) > SEPARATION_TOL, abs(P[2, 1]) > SEPARATION_TOL]
    if abs(P[2, 0]) > SEPARATION_TOL or all(tied):
        blocks = [(0, 3)]
    elif tied[0]:
        blocks = [(0, 2), (2, 3)]
    elif tied[1]:
        blocks = [(0, 1), (1, 3)]
    else:
        blocks = [(0, 1), (1, 2), (2, 3)]
    out = []
    with np.errstate(divide="ignore"):
        for lo, hi in blocks:
            if hi - lo == 1:
                d = rs[:, lo, lo]
                logmag = float(np.sum(np.log(d)))
                out.append(complex(logmag, 0.0 if P[lo, lo] > 0 else math.pi))
            else:
                out.extend(_block_log_eigs(P, rs, lo, hi))
    out = np.array(out, dtype=complex)
    return out[np.argsort(-out.real, kind="stable")]


def multipliers_from_log(logs) -> np.ndarray:
    out = []
    for z in np.asarray(logs, dtype=complex).ravel():
        if math.isnan(z.real):
            out.append(complex(math.nan, math.nan))
        elif z.real > 709.0:
            out.append(complex(math.copysign(math.inf, math.cos(z.imag)), 0.0))
        else:
            out.append(math.exp(z.real) * complex(math.cos(z.imag), math.sin(z.imag)))
    return np.array(out, dtype=complex)


def multipliers(sys: ResidualSystem, xi, epsilon: float) -> np.ndarray:
    return multipliers_from_log(log_multipliers(sys, xi, epsilon))


def _factor(logz: complex, shift: float) -> complex:
    # (lambda + shift) / (|lambda| + 1), stable for huge or tiny |lambda|
    if logz.real > 30.0:
        return complex(math.cos(logz.imag), math.sin(logz.imag))
    if logz.real < -30.0:
        return complex(shift, 0.0)
    lam = math.exp(logz.real) * complex(math.cos(logz.imag), math.sin(logz.imag))
    return (lam + shift) / (abs(lam) + 1.0)


def pd_test(logs) -> float:
    """Changes sign exactly when a real multiplier crosses -1."""
    val = complex(1.0)
    for z in logs:
        val *= _factor(complex(z), 1.0)
    return val.real


def unit_test(logs) -> float:
    """Changes sign when a real multiplier crosses +1 (fold cross-check)."""
    val = complex(1.0)
    for z in logs:
        val *= _factor(complex(z), -1.0)
    return val.real


# ---------------------------------------------------------------------------
# closed forms


def fixed_point_branch(sigma: float, delta: float, epsilon, s: int = 1):
    k = 1.0 + sigma - delta
    eps = np.asarray(epsilon, dtype=float)
    return 0.5 * (k * eps + s * np.sqrt(4.0 + k * k * eps * eps))


def pd_fixed_point_formula(p: StructuralParams, sigma: float, delta: float) -> float:
    """eps at which the fixed point (-) period-doubles to (-, +)."""
    a, b, c = p.a, p.b, p.c
    rad = (1.0 + sigma + delta) * (a * (3.0 + 3.0 * sigma - delta)
                                   + b * (1.0 + sigma + delta)
                                   + c * (-1.0 - sigma + 3.0 * delta))
    if rad <= 0.0:
        raise DegenerateParamsError("no period doubling of the fixed point (nonpositive radicand)")
    eps = 2.0 * (a - c) / math.sqrt(rad)
    if eps <= 0.0:
        raise DegenerateParamsError("no period doubling of the fixed point for eps > 0")
    return eps


# ---------------------------------------------------------------------------
# corrector and branch tracing


def _correct(sys, y_pred, y_k, tau, ell, opts):
    """Broyden iteration on the bordered system; returns ``None`` on failure.

    Iterates that leave the jump cap around the predictor, or repeated growth
    of the residual after fresh factorizations, end the attempt early so the
    step can be halved.
    """
    n = sys.n
    cap = opts.jump_factor * ell
    stalls = 0

    def F(y):
        return np.append(residual(sys, y[:n], y[n]), tau @ (y - y_k) - ell)

    y = y_pred.copy()
    f = F(y)
    B = qr_factor(_bordered(sys, y, tau))
    for it in range(1, opts.max_iter + 1):
        if np.max(np.abs(f[:n])) < opts.tol and abs(f[n]) < 1e-10:
            return y
        try:
            dy = -solve(B, f)
        except SingularSystemError:
            return None
        y_new = y + dy
        f_new = F(y_new)
        if not np.all(np.isfinite(f_new)) or np.max(np.abs(y_new[:n] - y_pred[:n])) > cap:
            return None
        grew = np.max(np.abs(f_new)) > GROWTH_REFACTOR * np.max(np.abs(f))
        stalls = stalls + 1 if grew else 0
        if stalls > 3:
            return None
        if it % opts.refactor_every == 0 or grew:
            B = qr_factor(_bordered(sys, y_new, tau))
        else:
            B = broyden_update(B, dy, f_new - f)
        y, f = y_new, f_new
    if np.max(np.abs(f[:n])) < opts.tol and abs(f[n]) < 1e-10:
        return y
    return None


def _make_point(sys, y, tau, flags):
    n = sys.n
    eps = float(y[n])
    logs = log_multipliers(sys, y[:n], eps) if eps != 0.0 else np.full(3, complex(math.nan, math.nan))
    return BranchPoint(eps, y[:n].copy(), tau.copy(), logs, frozenset(flags))


def trace(sys: ResidualSystem, y0, tau0, opts: ContinuationOptions, record: BranchRecord) -> BranchRecord:
    """Follow the branch from a converged point ``y0`` along ``tau0``."""
    n = sys.n
    y, tau = np.asarray(y0, dtype=float), np.asarray(tau0, dtype=float)
    if not record.points:
        record.points.append(_make_point(sys, y, tau, {Flag.CONVERGED}))
    ell = opts.first_step if opts.first_step is not None else opts.ell0
    for _ in range(opts.max_steps):
        while True:
            y_pred = y + ell * tau
            y_new = _correct(sys, y_pred, y, tau, ell, opts)
            if y_new is not None and np.max(np.abs(y_new[:n] - y_pred[:n])) <= opts.jump_factor * ell:
                break
            ell *= 0.5
            if ell < opts.ell_min:
                record.termination = f"step underflow at eps = {y[n]:.6g}"
                return record
        try:
            tau_new = tangent(sys, y_new, tau)
        except SingularSystemError:
            record.termination = f"singular tangent system at eps = {y_new[n]:.6g}"
            return record
        flags = {Flag.CONVERGED}
        if tau_new[n] * tau[n] < 0.0:
            flags.add(Flag.FOLD)
        pt = _make_point(sys, y_new, tau_new, flags)
        prev = record.points[-1]
        if prev.epsilon > 0.0 and pt.epsilon > 0.0 \
                and pd_test(prev.log_multipliers) * pd_test(pt.log_multipliers) < 0.0:
            pt = replace(pt, flags=pt.flags | {Flag.PERIOD_DOUBLING})
        record.points.append(pt)
        y, tau = y_new, tau_new
        ell = opts.ell0
        if y[n] > opts.eps_max:
            record.termination = "eps_max reached"
            return record
        if y[n] < opts.eps_min:
            record.termination = "returned below eps_min"
            return record
        if opts.stop_at_first_fold and Flag.FOLD in flags:
            record.termination = "first fold"
            return record
    record.termination = "step limit"
    return record


def continue_branch(sys: ResidualSystem, s, opts: ContinuationOptions | None = None,
                    xi0=None, detect: bool = True) -> BranchRecord:
    """Trace the branch of the word ``s`` from its AI state at eps = 0."""
    opts = ContinuationOptions() if opts is None else opts
    s = s if isinstance(s, SymbolSequence) else SymbolSequence(s)
    if s.period != sys.n:
        raise ValueError("word length does not match the system period")
    xi0 = ai_state(sys.p, s) if xi0 is None else np.asarray(xi0, dtype=float)
    res = np.max(np.abs(residual(sys, xi0, 0.0)))
    if res >= 1e-11:
        raise ConvergenceError(f"start point is not an AI state (residual {res:.3e})")
    tau0 = initial_tangent(sys, xi0)
    record = BranchRecord(sys.p, sys.sigma, sys.delta, s, options=opts.as_dict())
    trace(sys, np.append(xi0, 0.0), tau0, opts, record)
    if detect:
        record.events = detect_bifurcations(record, opts)
    return record


# ---------------------------------------------------------------------------
# event detection


def _point_on_arc(sys, y_k, tau_k, s_arc, opts):
    """Corrected branch point at arclength ``s_arc`` from ``y_k`` and its tangent."""
    if s_arc == 0.0:
        return y_k, tau_k
    y = _correct(sys, y_k + s_arc * tau_k, y_k, tau_k, s_arc, opts)
    if y is None:
        raise ConvergenceError("corrector failed during event refinement")
    return y, tangent(sys, y, tau_k)


def _refine(sys, a_pt, b_pt, fn, opts):
    n = sys.n
    y_k = np.append(a_pt.xi, a_pt.epsilon)
    y_b = np.append(b_pt.xi, b_pt.epsilon)
    tau_k = a_pt.tangent
    s_end = float(tau_k @ (y_b - y_k))

    def g(s_arc):
        if s_arc >= s_end:
            return fn(y_b, b_pt.tangent)
        y, t = _point_on_arc(sys, y_k, tau_k, s_arc, opts)
        return fn(y, t)

    s_root = brentq(g, 0.0, s_end, xtol=1e-11, rtol=4 * np.finfo(float).eps, maxiter=200)
    y, t = _point_on_arc(sys, y_k, tau_k, s_root, opts)
    return y, t


def smallest_singular_value(sys: ResidualSystem, xi, epsilon) -> float:
    J = jacobian(sys, xi, epsilon)[:, :-1]
    return float(np.linalg.svd(J, compute_uv=False)[-1])


def _partner_after(record: BranchRecord, k: int):
    """Word at which the branch lands on eps = 0 after index ``k`` (if no other fold intervenes)."""
    pts = record.points
    for j in range(k + 1, len(pts)):
        if Flag.FOLD in pts[j].flags and j > k + 1:
            return None
        if pts[j].epsilon < 0.0:
            a, b = pts[j - 1], pts[j]
            w = a.epsilon / (a.epsilon - b.epsilon)
            xi = (1.0 - w) * a.xi + w * b.xi
            try:
                return extract_symbols(record.p, xi)
            except AmbiguousSymbolError:
                return None
    return None


def detect_bifurcations(record: BranchRecord, opts: ContinuationOptions | None = None) -> list:
    """Folds (tangent sign change) and period doublings (multiplier through -1).

    Each event is refined by root finding on arclength between the bracketing
    points, re-correcting at every trial point.
    """
    opts = ContinuationOptions() if opts is None else opts
    sys = record.system
    n = sys.n
    events = []
    pts = record.points
    for k in range(1, len(pts)):
        a_pt, b_pt = pts[k - 1], pts[k]
        if Flag.FOLD in b_pt.flags:
            try:
                y, _ = _refine(sys, a_pt, b_pt, lambda y, t: t[n], opts)
            except (ConvergenceError, SingularSystemError, ValueError):
                y = np.append(b_pt.xi, b_pt.epsilon)
            events.append(BifurcationEvent(
                EventKind.SADDLE_NODE, float(y[n]), y[:n].copy(), _partner_after(record, k), k,
                smallest_singular_value(sys, y[:n], y[n]),
            ))
        if Flag.PERIOD_DOUBLING in b_pt.flags:
            def psi(y, t):
                return pd_test(log_multipliers(sys, y[:n], y[n]))
            try:
                y, _ = _refine(sys, a_pt, b_pt, psi, opts)
            except (ConvergenceError, SingularSystemError, ValueError):
                y = np.append(b_pt.xi, b_pt.epsilon)
            logs = log_multipliers(sys, y[:n], y[n])
            real = [multipliers_from_log([z])[0].real for z in logs if abs(math.sin(z.imag)) < 1e-12]
            closest = min(real, key=lambda v: abs(v + 1.0)) if real else math.nan
            events.append(BifurcationEvent(
                EventKind.PERIOD_DOUBLING, float(y[n]), y[:n].copy(), None, k, closest,
            ))
    return events


# ---------------------------------------------------------------------------
# period-doubling children


def spawn_pd_child(record: BranchRecord, event: BifurcationEvent,
                   opts: ContinuationOptions | None = None, amplitude: float = 1e-4) -> BranchRecord:
    """Continue the doubled-period branch born at a period doubling.

    The doubled parent orbit at the event is a solution of the period-2n
    system whose Jacobian has an antiperiodic null vector (the -1 eigenvector
    propagated around the orbit). Continuation starts there with that vector
    as tangent and a first step of ``amplitude``; the child symbols are read
    where the branch comes back to eps = 0.
    """
    if event.kind is not EventKind.PERIOD_DOUBLING:
        raise ValueError("children spawn only from period doublings")
    opts = ContinuationOptions(**(record.options or {})) if opts is None else opts
    child_sys = record.system.with_period(2 * record.word.period)
    xi2 = np.concatenate([event.orbit, event.orbit])
    J = jacobian(child_sys, xi2, event.epsilon)[:, :-1]
    _, _, vt = np.linalg.svd(J)
    v = vt[-1]
    tau0 = np.append(v, 0.0)
    child_opts = replace(opts, first_step=amplitude, stop_at_first_fold=False)
    child = BranchRecord(record.p, record.sigma, record.delta, record.word.doubled(), options=child_opts.as_dict())
    trace(child_sys, np.append(xi2, event.epsilon), tau0, child_opts, child)
    child.events = []
    if child.points and child.points[-1].epsilon < 0.0:
        landing = _partner_after(child, 0)
        if landing is not None:
            child.word = landing
    return child


def child_word(record: BranchRecord, event: BifurcationEvent, opts: ContinuationOptions | None = None):
    try:
        child = spawn_pd_child(record, event, opts)
    except AIToolkitError:
        return None
    if child.points and child.points[-1].epsilon < 0.0:
        return child.word
    return None
