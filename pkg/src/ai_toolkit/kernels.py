"""Hot numeric kernels.

Every kernel exists twice: a loop form (``*_loop``) that numba compiles when
available, and a vectorized pure-numpy form (``*_np``). The public names at the
bottom of the module bind to one or the other according to
:data:`ai_toolkit._jit.USE_NUMBA`. Kernels whose work is inherently sequential
(map iteration, the periodic QR sweep) have a plain-Python fallback instead of
a vectorized one.

Index convention for a periodic sequence ``xi`` of length ``n``: component
``t`` couples ``xi[t+1], xi[t], xi[t-1], xi[t-2]`` with indices taken mod ``n``.

Operator kinds for :func:`t_apply` / :func:`t_iterate`:

* ``KIND_GENERAL`` -- solve the rescaled difference equation for ``xi_t``
  with the general quadratic formula (reduces to the branch maps at eps = 0),
* ``KIND_VANISHING_B`` -- the b = 0 specialisation,
* ``KIND_PARALLEL`` -- the Delta = 0 form written with the slope ``m``.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

KIND_GENERAL = 0
KIND_VANISHING_B = 1
KIND_PARALLEL = 2

STATUS_OK = 0
STATUS_MAX_ITER = 1
STATUS_NEG_RADICAND = 2


# --------------------------------------------------------------------------
# contraction operators


def _t_apply_loop(kind, a, b, c, m, sigma, delta, eps, word, xi, out):
    n = xi.shape[0]
    disc = b * b - 4.0 * a * c
    for t in range(n):
        x_next = xi[(t + 1) % n]
        x1 = xi[(t - 1) % n]
        x2 = xi[(t - 2) % n]
        lin = x_next + sigma * x1 - delta * x2
        s = word[t]
        if kind == KIND_GENERAL:
            rad = disc * x1 * x1 + 4.0 * a * (1.0 + eps * lin)
            if rad < 0.0:
                return t
            out[t] = (-b * x1 + s * math.sqrt(rad)) / (2.0 * a)
        elif kind == KIND_VANISHING_B:
            rad = (1.0 - c * x1 * x1 + eps * lin) / a
            if rad < 0.0:
                return t
            out[t] = s * math.sqrt(rad)
        else:
            rad = 1.0 + eps * lin
            if rad < 0.0:
                return t
            out[t] = m * x1 + s * (1.0 - m) * math.sqrt(rad)
    return -1


def _t_iterate_loop(kind, a, b, c, m, sigma, delta, eps, word, xi0, tol, max_iter):
    n = xi0.shape[0]
    xi = xi0.copy()
    new = np.empty(n)
    for it in range(1, max_iter + 1):
        bad = _t_apply_loop(kind, a, b, c, m, sigma, delta, eps, word, xi, new)
        if bad >= 0:
            return xi, it, STATUS_NEG_RADICAND, bad
        step = 0.0
        for t in range(n):
            d = abs(new[t] - xi[t])
            if d > step:
                step = d
            xi[t] = new[t]
        if step < tol:
            return xi, it, STATUS_OK, -1
    return xi, max_iter, STATUS_MAX_ITER, -1


def _t_apply_np(kind, a, b, c, m, sigma, delta, eps, word, xi, out):
    x_next = np.roll(xi, -1)
    x1 = np.roll(xi, 1)
    x2 = np.roll(xi, 2)
    lin = x_next + sigma * x1 - delta * x2
    if kind == KIND_GENERAL:
        rad = (b * b - 4.0 * a * c) * x1 * x1 + 4.0 * a * (1.0 + eps * lin)
    elif kind == KIND_VANISHING_B:
        rad = (1.0 - c * x1 * x1 + eps * lin) / a
    else:
        rad = 1.0 + eps * lin
    neg = np.flatnonzero(rad < 0.0)
    if neg.size:
        return int(neg[0])
    root = word * np.sqrt(rad)
    if kind == KIND_GENERAL:
        out[:] = (-b * x1 + root) / (2.0 * a)
    elif kind == KIND_VANISHING_B:
        out[:] = root
    else:
        out[:] = m * x1 + (1.0 - m) * root
    return -1


def _t_iterate_np(kind, a, b, c, m, sigma, delta, eps, word, xi0, tol, max_iter):
    xi = np.array(xi0, dtype=float)
    new = np.empty_like(xi)
    for it in range(1, max_iter + 1):
        bad = _t_apply_np(kind, a, b, c, m, sigma, delta, eps, word, xi, new)
        if bad >= 0:
            return xi, it, STATUS_NEG_RADICAND, bad
        step = np.max(np.abs(new - xi))
        xi, new = new, xi
        if step < tol:
            return xi, it, STATUS_OK, -1
    return xi, max_iter, STATUS_MAX_ITER, -1


# --------------------------------------------------------------------------
# residual system G(xi, eps) and its Jacobian


def _residual_loop(a, b, c, sigma, delta, eps, xi, out):
    n = xi.shape[0]
    for t in range(n):
        x0 = xi[t]
        x1 = xi[(t - 1) % n]
        lin = xi[(t + 1) % n] + sigma * x1 - delta * xi[(t - 2) % n]
        out[t] = a * x0 * x0 + b * x0 * x1 + c * x1 * x1 - 1.0 - eps * lin
    return out


def _residual_np(a, b, c, sigma, delta, eps, xi, out):
    x1 = np.roll(xi, 1)
    lin = np.roll(xi, -1) + sigma * x1 - delta * np.roll(xi, 2)
    out[:] = a * xi * xi + b * xi * x1 + c * x1 * x1 - 1.0 - eps * lin
    return out


def _jacobian_loop(a, b, c, sigma, delta, eps, xi, out):
    n = xi.shape[0]
    for t in range(n):
        for j in range(n + 1):
            out[t, j] = 0.0
    for t in range(n):
        x0 = xi[t]
        xn = xi[(t + 1) % n]
        x1 = xi[(t - 1) % n]
        x2 = xi[(t - 2) % n]
        out[t, (t + 1) % n] += -eps
        out[t, t] += 2.0 * a * x0 + b * x1
        out[t, (t - 1) % n] += b * x0 + 2.0 * c * x1 - eps * sigma
        out[t, (t - 2) % n] += eps * delta
        out[t, n] = -(xn + sigma * x1 - delta * x2)
    return out


def _jacobian_np(a, b, c, sigma, delta, eps, xi, out):
    n = xi.shape[0]
    t = np.arange(n)
    x1 = np.roll(xi, 1)
    out[:] = 0.0
    np.add.at(out, (t, (t + 1) % n), -eps)
    np.add.at(out, (t, t), 2.0 * a * xi + b * x1)
    np.add.at(out, (t, (t - 1) % n), b * xi + 2.0 * c * x1 - eps * sigma)
    np.add.at(out, (t, (t - 2) % n), eps * delta)
    out[:, n] = -(np.roll(xi, -1) + sigma * x1 - delta * np.roll(xi, 2))
    return out


# --------------------------------------------------------------------------
# unscaled map L(x, y, z) = (delta z + G(x, y), x, y)


def _map_orbit_loop(a, b, c, sigma, delta, alpha, x0, n_steps):
    traj = np.empty((n_steps + 1, 3))
    x, y, z = x0[0], x0[1], x0[2]
    traj[0, 0] = x
    traj[0, 1] = y
    traj[0, 2] = z
    for k in range(1, n_steps + 1):
        xn = delta * z + alpha - sigma * y + a * x * x + b * x * y + c * y * y
        z = y
        y = x
        x = xn
        traj[k, 0] = x
        traj[k, 1] = y
        traj[k, 2] = z
    return traj


def _first_return_loop(a, b, c, sigma, delta, alpha, x0, tol, max_steps):
    x, y, z = x0[0], x0[1], x0[2]
    tol2 = tol * tol
    for k in range(1, max_steps + 1):
        xn = delta * z + alpha - sigma * y + a * x * x + b * x * y + c * y * y
        z = y
        y = x
        x = xn
        if not math.isfinite(x):
            return -2
        d2 = (x - x0[0]) ** 2 + (y - x0[1]) ** 2 + (z - x0[2]) ** 2
        if d2 < tol2:
            return k
    return -1


# --------------------------------------------------------------------------
# periodic QR sweep for the monodromy of the scaled third-order recurrence


def _qr3(z, q, r):
    # Householder QR of a 3x3 matrix with nonnegative diagonal in r.
    for i in range(3):
        for j in range(3):
            r[i, j] = z[i, j]
            q[i, j] = 1.0 if i == j else 0.0
    v = np.empty(3)
    for k in range(2):
        norm = 0.0
        for i in range(k, 3):
            norm += r[i, k] * r[i, k]
        norm = math.sqrt(norm)
        if norm == 0.0:
            continue
        alpha = -norm if r[k, k] >= 0.0 else norm
        vnorm = 0.0
        for i in range(3):
            v[i] = 0.0
        for i in range(k, 3):
            v[i] = r[i, k]
        v[k] -= alpha
        for i in range(k, 3):
            vnorm += v[i] * v[i]
        if vnorm == 0.0:
            continue
        for j in range(3):
            dot = 0.0
            for i in range(k, 3):
                dot += v[i] * r[i, j]
            f = 2.0 * dot / vnorm
            for i in range(k, 3):
                r[i, j] -= f * v[i]
        for i in range(3):
            dot = 0.0
            for j in range(k, 3):
                dot += q[i, j] * v[j]
            f = 2.0 * dot / vnorm
            for j in range(k, 3):
                q[i, j] -= f * v[j]
    for i in range(3):
        for j in range(i):
            r[i, j] = 0.0
        if r[i, i] < 0.0:
            for j in range(3):
                r[i, j] = -r[i, j]
                q[j, i] = -q[j, i]


def _transfer(a, b, c, sigma, delta, eps, x0, x1, out):
    out[0, 0] = (2.0 * a * x0 + b * x1) / eps
    out[0, 1] = (b * x0 + 2.0 * c * x1) / eps - sigma
    out[0, 2] = delta
    out[1, 0] = 1.0
    out[1, 1] = 0.0
    out[1, 2] = 0.0
    out[2, 0] = 0.0
    out[2, 1] = 1.0
    out[2, 2] = 0.0


def _periodic_qr_loop(a, b, c, sigma, delta, eps, xi, max_cycles, tol):
    n = xi.shape[0]
    rs = np.empty((n, 3, 3))
    q_old = np.eye(3)
    q_new = np.eye(3)
    q = np.empty((3, 3))
    z = np.empty((3, 3))
    at = np.empty((3, 3))
    cycles = 0
    for cyc in range(max_cycles):
        cycles = cyc + 1
        for i in range(3):
            for j in range(3):
                q[i, j] = q_old[i, j]
        for t in range(n):
            _transfer(a, b, c, sigma, delta, eps, xi[t], xi[(t - 1) % n], at)
            for i in range(3):
                for j in range(3):
                    s = 0.0
                    for k in range(3):
                        s += at[i, k] * q[k, j]
                    z[i, j] = s
            _qr3(z, q, rs[t])
        for i in range(3):
            for j in range(3):
                q_new[i, j] = q[i, j]
        lower = 0.0
        for (i, j) in ((1, 0), (2, 0), (2, 1)):
            p = 0.0
            for k in range(3):
                p += q_old[k, i] * q_new[k, j]
            if abs(p) > lower:
                lower = abs(p)
        if lower < tol or cyc == max_cycles - 1:
            break
        for i in range(3):
            for j in range(3):
                q_old[i, j] = q_new[i, j]
    return q_old, q_new, rs, cycles


def _periodic_qr_py(a, b, c, sigma, delta, eps, xi, max_cycles, tol):
    n = xi.shape[0]
    rs = np.empty((n, 3, 3))
    x1 = np.roll(xi, 1)
    mats = np.zeros((n, 3, 3))
    mats[:, 0, 0] = (2.0 * a * xi + b * x1) / eps
    mats[:, 0, 1] = (b * xi + 2.0 * c * x1) / eps - sigma
    mats[:, 0, 2] = delta
    mats[:, 1, 0] = 1.0
    mats[:, 2, 1] = 1.0
    q_old = np.eye(3)
    cycles = 0
    for cyc in range(max_cycles):
        cycles = cyc + 1
        q = q_old
        for t in range(n):
            q, r = np.linalg.qr(mats[t] @ q)
            sgn = np.where(np.diag(r) < 0.0, -1.0, 1.0)
            q = q * sgn
            rs[t] = np.triu(r * sgn[:, None])
        q_new = q
        p = q_old.T @ q_new
        lower = max(abs(p[1, 0]), abs(p[2, 0]), abs(p[2, 1]))
        if lower < tol or cyc == max_cycles - 1:
            break
        q_old = q_new
    return q_old, q_new, rs, cycles


# --------------------------------------------------------------------------
# dispatch

if USE_NUMBA:
    # helpers are rebound first: numba resolves callees through module globals
    _t_apply_loop = njit(_t_apply_loop)
    _qr3 = njit(_qr3)
    _transfer = njit(_transfer)
    t_apply = _t_apply_loop
    t_iterate = njit(_t_iterate_loop)
    residual = njit(_residual_loop)
    jacobian = njit(_jacobian_loop)
    map_orbit = njit(_map_orbit_loop)
    first_return = njit(_first_return_loop)
    periodic_qr = njit(_periodic_qr_loop)
else:
    t_apply = _t_apply_np
    t_iterate = _t_iterate_np
    residual = _residual_np
    jacobian = _jacobian_np
    map_orbit = _map_orbit_loop
    first_return = _first_return_loop
    periodic_qr = _periodic_qr_py

BACKEND = "numba" if USE_NUMBA else "numpy"
