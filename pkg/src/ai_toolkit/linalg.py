"""Dense linear algebra for the continuation corrector.

QR factorizations come from LAPACK (Householder) through scipy, and rank-one
updates use scipy's Givens-based ``qr_update``. The 3x3 eigenvalue routine is
closed form so that multiplier extraction does not depend on a general
eigensolver.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError, SingularSystemError

SINGULAR_RTOL = 1e-12
UPDATE_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class QRFactors:
    Q: np.ndarray
    R: np.ndarray

    @property
    def shape(self):
        return self.Q.shape[0], self.R.shape[1]

    def matrix(self) -> np.ndarray:
        return self.Q @ self.R

    def matvec(self, x) -> np.ndarray:
        return self.Q @ (self.R @ x)

    def diag_ratio(self) -> float:
        """Smallest over largest ``|R_ii|``; a cheap rank indicator."""
        d = np.abs(np.diag(self.R))
        top = d.max()
        return float(d.min() / top) if top > 0 else 0.0


def qr_factor(A) -> QRFactors:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError("qr_factor needs a matrix with rows >= cols")
    if not np.all(np.isfinite(A)):
        raise NumericalError("matrix has non-finite entries")
    Q, R = sla.qr(A, mode="economic" if A.shape[0] > A.shape[1] else "full", check_finite=False)
    return QRFactors(Q, R)


def solve(F: QRFactors, b) -> np.ndarray:
    rows, cols = F.shape
    if rows != cols:
        raise ValueError("solve needs a square factorization")
    d = np.abs(np.diag(F.R))
    if d.min() <= SINGULAR_RTOL * d.max():
        raise SingularSystemError(f"|R_ii| ratio {d.min() / max(d.max(), 1e-300):.3e} below tolerance")
    return sla.solve_triangular(F.R, F.Q.T @ np.asarray(b, dtype=float), check_finite=False)


def broyden_update(F: QRFactors, dx, df, rng=None) -> QRFactors:
    """Factors of ``B + (df - B dx) dx^T / (dx^T dx)`` where ``B = QR``.

    The Givens update is checked on a random probe vector; if it drifts by more
    than ``UPDATE_CHECK_TOL`` the updated matrix is refactored from scratch.
    """
    dx = np.asarray(dx, dtype=float)
    df = np.asarray(df, dtype=float)
    dd = float(dx @ dx)
    if dd == 0.0:
        raise ValueError("Broyden update needs a nonzero step")
    u = df - F.matvec(dx)
    v = dx / dd
    Q1, R1 = sla.qr_update(F.Q, F.R, u, v, check_finite=False)
    new = QRFactors(Q1, R1)
    rng = np.random.default_rng(0) if rng is None else rng
    z = rng.standard_normal(dx.size)
    want = F.matvec(z) + u * (v @ z)
    err = np.max(np.abs(new.matvec(z) - want))
    if err > UPDATE_CHECK_TOL * max(1.0, np.max(np.abs(want))):
        return qr_factor(F.matrix() + np.outer(u, v))
    return new


def inf_norm(x) -> float:
    x = np.asarray(x)
    if x.ndim == 1:
        return float(np.max(np.abs(x))) if x.size else 0.0
    return float(np.max(np.sum(np.abs(x), axis=1)))


def _polish(coef, r):
    # Newton on lambda^3 + c2 lambda^2 + c1 lambda + c0
    c2, c1, c0 = coef
    for _ in range(3):
        f = ((r + c2) * r + c1) * r + c0
        fp = (3.0 * r + 2.0 * c2) * r + c1
        if fp == 0.0:
            break
        step = f / fp
        if not math.isfinite(step):
            break
        r -= step
        if abs(step) <= 1e-16 * max(abs(r), 1.0):
            break
    return r


def eig2(A) -> tuple[complex, complex]:
    (p, q), (r, s) = np.asarray(A, dtype=float)
    tr, det = p + s, p * s - q * r
    disc = (0.5 * (p - s)) ** 2 + q * r
    if disc >= 0.0:
        root = math.sqrt(disc)
        big = 0.5 * tr + math.copysign(root, tr) if tr != 0.0 else root
        other = det / big if big != 0.0 else 0.5 * tr - root
        return complex(big), complex(other)
    im = math.sqrt(-disc)
    return complex(0.5 * tr, im), complex(0.5 * tr, -im)


def eig3(A) -> np.ndarray:
    """Eigenvalues of a 3x3 matrix from its characteristic cubic.

    Three real roots use the trigonometric form; one real root uses Cardano,
    after which the remaining pair comes from the trace and determinant.
    Real roots are polished by Newton steps on the cubic.
    """
    A = np.asarray(A, dtype=float)
    tr = A[0, 0] + A[1, 1] + A[2, 2]
    minors = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
              + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
              + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
    det = float(np.linalg.det(A)) if np.all(np.isfinite(A)) else math.nan
    coef = (-tr, minors, -det)
    shift = tr / 3.0
    # depressed cubic mu^3 + P mu + Qc with lambda = mu + shift
    P = minors - tr * tr / 3.0
    Qc = -2.0 * tr**3 / 27.0 + tr * minors / 3.0 - det
    disc = (Qc / 2.0) ** 2 + (P / 3.0) ** 3
    if disc <= 0.0 and P < 0.0:
        rad = 2.0 * math.sqrt(-P / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * Qc / (P * rad)))
        phi = math.acos(arg) / 3.0
        roots = [_polish(coef, rad * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift) for k in range(3)]
        roots.sort(key=lambda z: -abs(z))
        return np.array(roots, dtype=complex)
    if P == 0.0 and Qc == 0.0:
        return np.array([shift, shift, shift], dtype=complex)
    sq = math.sqrt(max(disc, 0.0))
    u = np.cbrt(-Qc / 2.0 + sq)
    v = np.cbrt(-Qc / 2.0 - sq)
    r = _polish(coef, float(u + v) + shift)
    s = tr - r
    # product of the pair; avoid dividing by a tiny real root
    prod = det / r if abs(r) > 1e-8 * max(1.0, abs(tr)) else minors - r * s
    d2 = s * s / 4.0 - prod
    if d2 >= 0.0:
        root = math.sqrt(d2)
        z1 = s / 2.0 + math.copysign(root, s) if s != 0.0 else root
        z2 = prod / z1 if z1 != 0.0 else s / 2.0 - root
        roots = [complex(r), complex(z1), complex(z2)]
    else:
        im = math.sqrt(-d2)
        roots = [complex(r), complex(s / 2.0, im), complex(s / 2.0, -im)]
    roots.sort(key=lambda z: -abs(z))
    return np.array(roots, dtype=complex)


def eig_log(A, log_scale: float = 0.0) -> np.ndarray:
    """Eigenvalues of ``exp(log_scale) * A`` as ``log|lambda| + i arg(lambda)``."""
    A = np.asarray(A, dtype=float)
    vals = eig2(A) if A.shape == (2, 2) else (complex(A[0, 0]),) if A.shape == (1, 1) else eig3(A)
    out = np.empty(len(vals), dtype=complex)
    for k, z in enumerate(vals):
        mag = abs(z)
        out[k] = complex(math.log(mag) + log_scale if mag > 0 else -math.inf,
                         cmath.phase(z) if mag > 0 else 0.0)
    return out
