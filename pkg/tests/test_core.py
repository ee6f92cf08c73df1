import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ai_toolkit.core import (
    ConicClass,
    State3,
    StructuralParams,
    SymbolSequence,
    UnfoldingParams,
    asymptote_slopes,
    classify,
    from_slope,
    henon_embed_check,
    iterate_map,
    map_step,
    quadratic_form,
    residual_L,
    residual_orbit,
    scale_orbit,
    unscale_orbit,
)
from ai_toolkit.errors import DegenerateParamsError, NotEmbeddableError

finite = st.floats(-5, 5, allow_nan=False)


def test_normalization_enforced():
    StructuralParams(0.9, 0.0, 0.1)
    with pytest.raises(DegenerateParamsError):
        StructuralParams(1.0, 0.5, 0.0)
    with pytest.raises(DegenerateParamsError):
        StructuralParams(math.nan, 0.0, 1.0)


def test_from_ac_fills_b():
    p = StructuralParams.from_ac(1.25, -0.25)
    assert p.b == 0.0


@pytest.mark.parametrize("abc, conic", [
    ((0.9, 0.0, 0.1), ConicClass.ELLIPSE),
    ((1.0, 0.0, 0.0), ConicClass.PARALLEL_LINES),
    ((1.25, 0.0, -0.25), ConicClass.HYPERBOLA),
    ((25 / 9, -20 / 9, 4 / 9), ConicClass.PARALLEL_LINES),
])
def test_classify(abc, conic):
    assert classify(StructuralParams(*abc)) is conic


def test_discriminant_tolerance_band():
    # |Delta| just inside 1e-10 counts as parallel lines
    c = 1e-11 / 4
    p = StructuralParams(1.0 - c, 0.0, c)
    assert abs(p.discriminant) <= 1e-10
    assert classify(p) is ConicClass.PARALLEL_LINES


@given(st.floats(-3, 0.95))
def test_from_slope_is_parallel(m):
    p = from_slope(m)
    assert classify(p) is ConicClass.PARALLEL_LINES
    assert p.slope == pytest.approx(m, abs=1e-9)


def test_from_slope_rejects_one():
    with pytest.raises(DegenerateParamsError):
        from_slope(1.0)


def test_from_slope_table_values():
    p = from_slope(0.4)
    assert (p.a, p.b, p.c) == pytest.approx((25 / 9, -20 / 9, 4 / 9), abs=1e-14)


def test_asymptotes_of_hyperbola():
    p = StructuralParams(1.25, 0.0, -0.25)
    m1, m2 = asymptote_slopes(p)
    for m in (m1, m2):
        assert quadratic_form(p, m, 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateParamsError):
        asymptote_slopes(StructuralParams(0.9, 0.0, 0.1))


def test_unfolding_accessors():
    u = UnfoldingParams(-0.3, 0.5, 0.5)
    assert u.alpha() == -4.0
    assert u.gamma() == pytest.approx(0.5 * 1.8)
    with pytest.raises(DegenerateParamsError):
        UnfoldingParams(0.1, 0.1, 0.0).alpha()
    with pytest.raises(DegenerateParamsError):
        UnfoldingParams(0.1, 0.1, -1.0)


def test_symbol_sequence_roundtrip():
    s = SymbolSequence("-++-")
    assert str(s) == "-++-"
    assert s.to_list() == [-1, 1, 1, -1]
    assert s == "-++-"
    assert -s == "+--+"
    assert s.rotated(1) == "++--"
    assert s.doubled().period == 8
    assert s[5] == 1  # cyclic indexing
    with pytest.raises(ValueError):
        SymbolSequence("")
    with pytest.raises(ValueError):
        SymbolSequence([1, 0, -1])
    with pytest.raises(ValueError):
        s.word[0] = 1


def test_map_step_matches_definition():
    p = StructuralParams(0.5, 0.2, 0.3)
    u = UnfoldingParams(0.4, 0.7)
    x, y, z = 0.3, -0.2, 1.1
    alpha = -2.0
    g = alpha - 0.4 * y + 0.5 * x * x + 0.2 * x * y + 0.3 * y * y
    assert map_step(p, u, alpha, (x, y, z)) == pytest.approx(State3(0.7 * z + g, x, y))


def test_iterate_map_rows_follow_map_step():
    p = StructuralParams(0.5, 0.2, 0.3)
    u = UnfoldingParams(0.4, 0.7)
    traj = iterate_map(p, u, -0.5, (0.1, 0.2, 0.3), 5)
    assert traj.shape == (6, 3)
    for k in range(5):
        assert np.allclose(traj[k + 1], map_step(p, u, -0.5, traj[k]), rtol=0, atol=1e-14)


@settings(max_examples=50)
@given(st.lists(finite, min_size=3, max_size=3), st.floats(0.05, 2.0), st.floats(-1, 1), st.floats(-1, 1))
def test_scaled_orbit_solves_residual(seed, eps, sigma, delta):
    # an unscaled periodic-like stretch: residual vanishes along any map trajectory
    p = StructuralParams(0.7, 0.1, 0.2)
    u = UnfoldingParams(sigma, delta, eps)
    traj = iterate_map(p, u, u.alpha(), np.array(seed) * 0.1, 4)
    x = traj[:, 0][::-1]  # x_{t+1}, x_t, x_{t-1}, x_{t-2}, ...
    xi = scale_orbit(x, eps)
    if not np.all(np.isfinite(xi)):
        return
    r = residual_L(p, u, xi[0], xi[1], xi[2], xi[3])
    scale = max(1.0, float(np.max(np.abs(xi))) ** 2)
    assert abs(r) <= 1e-9 * scale
    assert np.allclose(unscale_orbit(xi, eps), x)


def test_residual_orbit_fixed_point_formula():
    p = StructuralParams(0.9, 0.0, 0.1)
    sigma, delta, eps = 0.5, 0.25, 0.7
    k = 1 + sigma - delta
    xi = 0.5 * (k * eps + math.sqrt(4 + k * k * eps * eps))
    assert residual_orbit(p, UnfoldingParams(sigma, delta, eps), np.array([xi]))[0] == pytest.approx(0.0, abs=1e-14)


def test_henon_embedding_defect_is_rounding():
    assert henon_embed_check(-0.3, -1.0 / 0.9 ** 2, 1000, (0.1, 0.1, 0.0)) <= 1e-12


def test_henon_embedding_requires_hen_case():
    with pytest.raises(NotEmbeddableError):
        henon_embed_check(-0.3, -1.0, 10, (0, 0, 0), p=StructuralParams(0.9, 0.0, 0.1))
    with pytest.raises(NotEmbeddableError):
        henon_embed_check(-0.3, -1.0, 10, (0, 0, 0), delta=0.1)
