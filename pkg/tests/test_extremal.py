import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycert.errors import ConditionViolation, InvalidWeight
from hardycert.extremal import (
    construct_flat_function, construct_sign_function, orthogonal_roots, root_rule,
    sharp_distance, solve_extremal, verify_root_bound,
)
from hardycert.weightlang import parse

from oracles import WEIGHTS, monic_objective, moment_roots, signed_moments


def test_linear_case_closed_form():
    # P = x - c with int_0^r (x - c) x dx = 0 gives c = 2r/3
    poly = solve_extremal(1, 2.0, parse("1"), 3.0)
    assert poly.roots[0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("w", ["1", "x", "exp(-x)"])
def test_orthogonal_roots_match_moment_oracle(n, w):
    got = orthogonal_roots(n, parse(w), 2.0)
    np.testing.assert_allclose(got, moment_roots(n, WEIGHTS[w], 2.0), rtol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.floats(1.2, 4.0), st.floats(0.5, 20.0))
def test_extremal_is_stationary_and_admissible(n, s, r):
    poly = solve_extremal(n, s, parse("exp(-x)"), r)
    x = poly.roots
    assert 0 < x[0] and x[-1] < r and np.all(np.diff(x) > 0)
    assert np.max(np.abs(poly.residuals)) < 1e-8


@pytest.mark.parametrize("n, s", [(1, 1.5), (2, 3.0), (3, 2.5)])
def test_objective_matches_oracle(n, s):
    poly = solve_extremal(n, s, parse("1"), 1.0)
    low = poly.coefficients[1:][::-1]
    assert poly.objective == pytest.approx(monic_objective(low, n, s, WEIGHTS["1"], 1.0),
                                           rel=1e-9)


def test_invalid_weight_rejected():
    with pytest.raises(InvalidWeight):
        solve_extremal(2, 2.0, parse("x - 1"), 3.0)


@pytest.mark.parametrize("e", [0.5, 1.0, 2.0, 3.0])
def test_root_rule_integrates_root_powers(e):
    roots = np.array([0.3, 0.7])
    X, W, sign = root_rule(roots, 1.0, e)
    got = float(np.sum(W))
    f = lambda t: abs((t - 0.3) * (t - 0.7)) ** e
    from oracles import quad
    assert got == pytest.approx(quad(f, 0, 1, points=[0.3, 0.7]), rel=1e-10)
    assert set(np.unique(sign)) <= {-1.0, 1.0}


def test_root_bound_report():
    poly = solve_extremal(3, 2.0, parse("1"), 1.0)
    rep = verify_root_bound(poly, parse("1"))
    assert rep.ok
    assert rep.ratio == pytest.approx(1.0 / poly.roots[0], rel=1e-12)
    assert all(v >= 1 for v in rep.step_ratios)


@pytest.mark.parametrize("n, p", [(1, 2.0), (2, 1.5), (3, 3.0)])
def test_sharp_distance_two_methods(n, p):
    sd = sharp_distance(n, p, parse("1"), 1.0)
    assert sd.discrepancy < 1e-5
    assert sd.lower_bound_holds


def test_sharp_distance_linear_closed_form():
    # min_c int_0^1 (1 + c t)^2 dt = 1/4 at c = -3/2
    sd = sharp_distance(1, 2.0, parse("1"), 1.0)
    assert sd.value == pytest.approx(0.5, rel=1e-9)


def test_sharp_distance_needs_integrability():
    with pytest.raises(ConditionViolation) as info:
        sharp_distance(2, 2.0, parse("x^(1/2)"), 1.0)
    assert info.value.condition == "c21"


@pytest.mark.parametrize("w, a, b, l, expected", [
    ("1", 0.0, 1.0, 1, [0.5]),
    ("1", 0.0, 1.0, 2, [0.25, 0.75]),
    ("x", 0.0, 1.0, 1, [math.sqrt(0.5)]),
    ("x", 1.0, 2.0, 1, [math.sqrt(2.5)]),
])
def test_sign_breakpoints_closed_form(w, a, b, l, expected):
    sig = construct_sign_function(parse(w), a, b, l)
    np.testing.assert_allclose(sig.breakpoints, expected, rtol=1e-10)


@pytest.mark.parametrize("l", [1, 2, 3, 4, 5])
def test_sign_moments_vanish(l):
    sig = construct_sign_function(parse("exp(-x)"), 1.0, 2.0, l)
    signed, total = signed_moments(WEIGHTS["exp(-x)"], sig.pieces(), l)
    assert np.max(np.abs(signed) / total) < 1e-10


def test_flat_function_support_and_top_derivative():
    g = construct_flat_function(parse("x"), 1.0, 2.0, 3)
    assert g(0.5) == 0.0 and g(2.5) == 0.0
    xs = np.linspace(1.01, 1.99, 9)
    np.testing.assert_allclose(np.abs(g.derivative(xs, 3)), xs, rtol=1e-14)
    with pytest.raises(ValueError):
        g.derivative(1.5, 4)
