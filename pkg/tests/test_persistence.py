import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ai_toolkit.ai_limit import BranchMaps, ai_state, branch_map, extract_symbols
from ai_toolkit.core import StructuralParams, SymbolSequence, UnfoldingParams, from_slope, residual_orbit
from ai_toolkit.errors import DegenerateParamsError, OffCurveError, UnsupportedCaseError
from ai_toolkit.persistence import (
    CaseKind,
    PersistenceCase,
    apply_operator,
    empirical_lipschitz,
    epsilon_N,
    epsilon_N_search,
    gamma,
    henon_horseshoe_epsilon,
    make_case,
    operator_T,
    operator_T0,
    operator_Tpar,
    parallel_lines_bounds,
    region_M_check,
    solve_orbit_contraction,
    vanishing_b_bounds,
)
from ai_toolkit.presets import PRESETS

E = PRESETS["ellipse"]
HE = PRESETS["henon"]


def word(rng, n):
    return SymbolSequence(rng.choice([-1, 1], n))


@pytest.mark.parametrize("eps, sigma, delta, expected", [
    (0.15, 0.5, 0.25, 0.2625),
    (0.2, 0.1, 0.1, 0.24),
    (0.0, 0.3, 0.3, 0.0),
    (0.2, -0.1, -0.1, 0.24),
])
def test_gamma(eps, sigma, delta, expected):
    assert gamma(UnfoldingParams(sigma, delta, eps)) == pytest.approx(expected, abs=1e-15)


def test_case_validation():
    with pytest.raises(DegenerateParamsError):
        PersistenceCase(CaseKind.VANISHING_B, StructuralParams(0.5, 0.1, 0.4), UnfoldingParams(0, 0))
    with pytest.raises(DegenerateParamsError):
        PersistenceCase(CaseKind.PARALLEL_LINES, StructuralParams(0.9, 0.0, 0.1), UnfoldingParams(0, 0))
    with pytest.raises(DegenerateParamsError):
        make_case(E.p, E.unfolding(), M=-1.0)


def test_kind_detection():
    assert make_case(E.p, E.unfolding()).kind is CaseKind.VANISHING_B
    assert make_case(PRESETS["parallel"].p, E.unfolding()).kind is CaseKind.PARALLEL_LINES
    # b = 0 takes precedence when both special cases hold
    assert make_case(HE.p, HE.unfolding()).kind is CaseKind.VANISHING_B
    assert make_case(StructuralParams(0.6, 0.1, 0.3), E.unfolding()).kind is CaseKind.GENERAL_T


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_operators_reduce_to_branch_maps(name, rng):
    pre = PRESETS[name]
    pc = make_case(pre.p, pre.unfolding(0.0))
    bm = BranchMaps(pre.p)
    s = word(rng, 1000)
    xi = rng.uniform(-0.9, 0.9, 1000)
    expected = branch_map(bm, s.as_float(), np.roll(xi, 1))
    assert np.max(np.abs(operator_T(pc, s, xi) - expected)) <= 1e-15
    assert np.max(np.abs(apply_operator(pc, s, xi) - expected)) <= 1e-15


def test_special_operators_match_general():
    rng = np.random.default_rng(3)
    s = word(rng, 200)
    xi = s.as_float() + rng.uniform(-0.2, 0.2, 200)
    pc = make_case(E.p, E.unfolding(0.1))
    assert np.allclose(operator_T0(pc, s, xi), operator_T(pc, s, xi), rtol=0, atol=1e-14)
    pre = PRESETS["parallel"]
    pc = make_case(pre.p, pre.unfolding(0.1))
    assert np.allclose(operator_Tpar(pc, s, xi), operator_T(pc, s, xi), rtol=0, atol=1e-13)


def test_operator_radicand_error():
    pc = make_case(HE.p, HE.unfolding(1.0))
    xi = np.array([-5.0, 1.0, 1.0])
    with pytest.raises(OffCurveError) as err:
        operator_T0(pc, "+++", xi)
    assert err.value.index == 2


def test_henon_fixed_point_value():
    pc = make_case(HE.p, HE.unfolding(0.5))
    xi = solve_orbit_contraction(pc, "+", override=True)
    assert xi[0] == pytest.approx(0.5 * (0.35 + math.sqrt(4.1225)), abs=1e-12)


def test_henon_bound_at_optimal_cube():
    M = math.sqrt(3) - 1
    b = vanishing_b_bounds(1.0, 0.0, M)
    assert b["maps_into_upper"] == pytest.approx((M * M + 2 * M) / (1 + M))
    assert b["maps_into_lower"] == pytest.approx((2 * M - M * M) / (1 + M))
    assert b["contraction"] == pytest.approx(2 * (1 - M))
    v = region_M_check(make_case(HE.p, HE.unfolding(0.1), M))
    assert v.gamma_bound == pytest.approx(2 * (2 - math.sqrt(3)), abs=1e-12)


def test_ellipse_region_at_cube_size_04():
    v = region_M_check(make_case(E.p, E.unfolding(0.15), 0.4))
    assert v.in_region
    assert v.gamma_bound == pytest.approx(0.3428571428571, abs=1e-9)


@pytest.mark.parametrize("name", ["ellipse", "henon", "vp"])
def test_zero_cube_admits_nothing(name):
    pre = PRESETS[name]
    v = region_M_check(make_case(pre.p, pre.unfolding(1e-6), 0.0))
    assert v.gamma_bound <= 0.0 and not v.in_region


def test_general_case_unsupported():
    pc = make_case(StructuralParams(0.6, 0.1, 0.3), E.unfolding(0.01))
    with pytest.raises(UnsupportedCaseError):
        region_M_check(pc)
    with pytest.raises(UnsupportedCaseError):
        solve_orbit_contraction(pc, "+-")
    with pytest.raises(UnsupportedCaseError):
        epsilon_N(pc.p, 0.5, 0.25)
    xi = solve_orbit_contraction(pc, "+-+", override=True)
    assert np.max(np.abs(residual_orbit(pc.p, pc.u, xi))) < 1e-11


def test_region_requires_certificate():
    with pytest.raises(UnsupportedCaseError):
        solve_orbit_contraction(make_case(E.p, E.unfolding(0.5), 0.4), "+-")


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["ellipse", "henon", "vp", "parallel"]), st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.floats(0, 1))
def test_region_monotone_in_eps(name, e1, e2, M):
    pre = PRESETS[name]
    lo, hi = sorted((e1, e2))
    v_lo = region_M_check(make_case(pre.p, pre.unfolding(lo), M))
    v_hi = region_M_check(make_case(pre.p, pre.unfolding(hi), M))
    assert v_lo.gamma_bound == v_hi.gamma_bound
    if v_hi.in_region:
        assert v_lo.in_region


def test_parallel_bounds_structure():
    b = parallel_lines_bounds(0.4, 1.0, 0.5)
    assert set(b) == {"maps_into", "contraction", "radical"}
    # the contraction root satisfies its quadratic
    m, X, g = 0.4, 1.5, b["contraction"]
    assert g * g * (1 - m) ** 2 - 4 * (1 - abs(m)) ** 2 * (1 - g * X) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name, expected", [
    ("parallel", 0.5416), ("ellipse", 0.2143), ("henon", 0.4122), ("vp", 0.0481),
])
def test_epsilon_N_reference(name, expected):
    pre = PRESETS[name]
    assert epsilon_N(pre.p, pre.sigma, pre.delta) == pytest.approx(expected, abs=2e-3)


def test_epsilon_N_frozen_values():
    # golden-section optimum, frozen from an independent dense-grid maximization
    for name, value in [("parallel", 0.541533), ("ellipse", 0.214341), ("henon", 0.412230), ("vp", 0.048105)]:
        pre = PRESETS[name]
        assert epsilon_N(pre.p, pre.sigma, pre.delta) == pytest.approx(value, abs=2e-6)


def test_epsilon_N_against_dense_grid():
    for name in PRESETS:
        pre = PRESETS[name]
        res = epsilon_N_search(pre.p, pre.sigma, pre.delta)
        pc = make_case(pre.p, pre.unfolding())
        hi = 1.0 if pc.kind is CaseKind.VANISHING_B else 10.0
        grid = np.linspace(0, hi, 200001)[1:-1]
        best = max(region_M_check(make_case(pre.p, pre.unfolding(), M)).gamma_bound for M in grid[::50])
        assert res.gamma_bound >= best - 1e-9


def test_main_text_bound_is_empty_for_henon():
    assert epsilon_N(HE.p, HE.sigma, HE.delta, main_text=True) == 0.0


def test_horseshoe_bound():
    assert henon_horseshoe_epsilon(-0.3) == pytest.approx(0.4061, abs=1e-4)
    assert henon_horseshoe_epsilon(0.0) == pytest.approx(0.6498, abs=1e-4)


@pytest.mark.parametrize("eps", [0.01, 0.075, 0.15])
def test_ellipse_nested_orbits(eps):
    rng = np.random.default_rng(250)
    s = word(rng, 250)
    pc = make_case(E.p, E.unfolding(eps), 0.4)
    xi = solve_orbit_contraction(pc, s)
    assert np.max(np.abs(residual_orbit(E.p, E.unfolding(eps), xi))) < 1e-11
    assert np.max(np.abs(xi - s.as_float())) <= 0.4
    assert extract_symbols(E.p, xi) == s


def test_vp_small_eps_stays_near_word():
    pre = PRESETS["vp"]
    s = word(np.random.default_rng(5), 250)
    xi = solve_orbit_contraction(make_case(pre.p, pre.unfolding(0.01), 0.05), s, override=True)
    assert np.max(np.abs(xi - s.as_float())) < 0.05
    assert np.max(np.abs(residual_orbit(pre.p, pre.unfolding(0.01), xi))) < 1e-11


@pytest.mark.parametrize("m, sigma, delta, M", [(-0.2, 0.1, 0.1, 0.7), (0.95, 0.7, 0.6, 0.5)])
def test_parallel_orbits_converge(m, sigma, delta, M):
    p = from_slope(m)
    u = UnfoldingParams(sigma, delta, 0.2)
    s = word(np.random.default_rng(7), 250)
    xi = solve_orbit_contraction(make_case(p, u, M), s, override=True)
    assert np.max(np.abs(residual_orbit(p, u, xi))) < 1e-11
    assert extract_symbols(p, xi) == s


def test_zero_eps_returns_ai_state():
    s = word(np.random.default_rng(8), 64)
    assert np.array_equal(solve_orbit_contraction(make_case(E.p, E.unfolding(0.0), 0.4), s), ai_state(E.p, s))


@pytest.mark.parametrize("name, M", [("ellipse", 0.4), ("henon", math.sqrt(3) - 1), ("parallel", 0.5)])
def test_certified_contraction(name, M):
    pre = PRESETS[name]
    eps = 0.9 * epsilon_N_search(pre.p, pre.sigma, pre.delta).epsilon_n
    pc = make_case(pre.p, pre.unfolding(eps), M)
    s = word(np.random.default_rng(9), 100)
    assert empirical_lipschitz(pc, s, 100, rng=1) < 1.0


@pytest.mark.parametrize("name", ["ellipse", "henon", "parallel", "vp"])
def test_uniqueness_from_random_starts(name):
    pre = PRESETS[name]
    res = epsilon_N_search(pre.p, pre.sigma, pre.delta)
    eps = 0.9 * res.epsilon_n
    pc = make_case(pre.p, pre.unfolding(eps), res.M)
    rng = np.random.default_rng(10)
    s = word(rng, 60)
    sols = []
    for _ in range(10):
        if pc.kind is CaseKind.VANISHING_B:
            xi0 = s.as_float() + res.M * rng.uniform(-1, 1, 60)
        else:
            xi0 = (pc.x_star + res.M) * rng.uniform(-1, 1, 60)
        sols.append(solve_orbit_contraction(pc, s, xi0=xi0))
    for x in sols[1:]:
        assert np.max(np.abs(x - sols[0])) < 1e-10
