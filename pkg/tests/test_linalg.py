import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ai_toolkit.errors import NumericalError, SingularSystemError
from ai_toolkit.linalg import broyden_update, eig2, eig3, eig_log, inf_norm, qr_factor, solve


def test_identity_factors():
    F = qr_factor(np.eye(4))
    assert np.allclose(np.abs(F.Q), np.eye(4)) and np.allclose(np.abs(F.R), np.eye(4))
    b = np.arange(4.0)
    assert np.allclose(solve(F, b), b, rtol=0, atol=1e-15)


def test_reconstruction_50(rng):
    A = rng.standard_normal((50, 50))
    F = qr_factor(A)
    assert np.linalg.norm(F.matrix() - A) / np.linalg.norm(A) < 1e-12
    assert np.allclose(F.Q.T @ F.Q, np.eye(50), atol=1e-13)
    assert np.allclose(F.R, np.triu(F.R))


def test_tall_matrix():
    A = np.random.default_rng(2).standard_normal((7, 4))
    F = qr_factor(A)
    assert F.Q.shape == (7, 4)
    assert inf_norm(F.matrix() - A) <= 1e-10 * inf_norm(A)
    with pytest.raises(ValueError):
        qr_factor(A.T)


def test_rank_deficient_is_flagged(rng):
    A = rng.standard_normal((6, 6))
    A[:, 5] = A[:, 2]
    F = qr_factor(A)
    assert abs(F.R[-1, -1]) < 1e-10
    assert F.diag_ratio() < 1e-12
    with pytest.raises(SingularSystemError):
        solve(F, np.ones(6))


def test_nonfinite_rejected():
    with pytest.raises(NumericalError):
        qr_factor(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_solve_backward_error(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        A = rng.standard_normal((n, n)) + 3 * np.eye(n)
        b = rng.standard_normal(n)
        x = solve(qr_factor(A), b)
        assert inf_norm(A @ x - b) <= 1e-9 * (inf_norm(A) * inf_norm(x) + inf_norm(b))


def test_solve_100(rng):
    A = rng.standard_normal((100, 100)) + 10 * np.eye(100)
    b = rng.standard_normal(100)
    x = solve(qr_factor(A), b)
    assert inf_norm(A @ x - b) <= 1e-9 * (inf_norm(A) * inf_norm(x) + inf_norm(b))


def test_companion_inverse():
    # companion of (l - 1)(l - 2)(l - 3) = l^3 - 6 l^2 + 11 l - 6
    C = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    Cinv = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1 / 6, -1.0, 11 / 6]])
    assert np.allclose(C @ Cinv, np.eye(3))
    F = qr_factor(C)
    for k in range(3):
        e = np.eye(3)[k]
        assert np.allclose(solve(F, e), Cinv[:, k], rtol=0, atol=1e-12)


def test_broyden_noop(rng):
    B = rng.standard_normal((10, 10)) + 4 * np.eye(10)
    F = qr_factor(B)
    dx = rng.standard_normal(10)
    G = broyden_update(F, dx, B @ dx)
    assert np.allclose(G.matrix(), B, atol=1e-12)


def test_broyden_secant_and_refactor_agreement(rng):
    B = rng.standard_normal((30, 30)) + 5 * np.eye(30)
    F = qr_factor(B)
    dx, df = rng.standard_normal(30), rng.standard_normal(30)
    G = broyden_update(F, dx, df)
    assert np.allclose(G.matvec(dx), df, rtol=0, atol=1e-10)
    explicit = B + np.outer(df - B @ dx, dx) / (dx @ dx)
    assert np.max(np.abs(G.matrix() - qr_factor(explicit).matrix())) < 1e-8


def test_broyden_zero_step():
    with pytest.raises(ValueError):
        broyden_update(qr_factor(np.eye(3)), np.zeros(3), np.ones(3))


def test_broyden_drift_over_thirty_updates(rng):
    B = rng.standard_normal((20, 20)) + 5 * np.eye(20)
    F = qr_factor(B)
    explicit = B.copy()
    for _ in range(30):
        dx, df = rng.standard_normal(20), rng.standard_normal(20)
        F = broyden_update(F, dx, df)
        explicit = explicit + np.outer(df - explicit @ dx, dx) / (dx @ dx)
        assert np.max(np.abs(F.matrix() - explicit)) < 1e-6


def test_eig3_diagonal():
    assert np.allclose(sorted(eig3(np.diag([1.0, 2.0, 3.0])).real), [1, 2, 3])


def test_eig3_cube_roots_of_unity():
    C = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    vals = eig3(C)
    for k in range(3):
        w = cmath.exp(2j * cmath.pi * k / 3)
        assert min(abs(v - w) for v in vals) < 1e-12


def test_eig3_trace_det_identities():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        A = rng.standard_normal((3, 3))
        vals = eig3(A)
        tr, det = np.trace(A), np.linalg.det(A)
        assert abs(vals.sum() - tr) <= 1e-10 * max(1.0, abs(tr), np.abs(A).max())
        assert abs(np.prod(vals) - det) <= 1e-10 * max(1.0, abs(det))


@settings(max_examples=200)
@given(arrays(np.float64, (3, 3), elements=st.floats(-100, 100)))
def test_eig3_matches_reference(A):
    vals = np.sort_complex(eig3(A))
    ref = np.sort_complex(np.linalg.eigvals(A))
    scale = max(1.0, np.abs(A).max())
    # roots of a defective cubic are only cube-root accurate
    for v in vals:
        assert np.min(np.abs(ref - v)) <= 1e-4 * scale


def test_eig3_repeated_root():
    vals = eig3(2.0 * np.eye(3))
    assert np.allclose(vals, 2.0)


def test_eig2_cases():
    assert sorted(z.real for z in eig2(np.array([[2.0, 0.0], [0.0, -1.0]]))) == [-1.0, 2.0]
    z1, z2 = eig2(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert {z1, z2} == {1j, -1j}


def test_eig_log_scale():
    logs = eig_log(np.diag([2.0, -0.5, 0.0]), log_scale=10.0)
    assert logs[0] == pytest.approx(complex(np.log(2.0) + 10.0, 0.0))
    assert logs[1] == pytest.approx(complex(np.log(0.5) + 10.0, np.pi))
    assert logs[2].real == -np.inf
