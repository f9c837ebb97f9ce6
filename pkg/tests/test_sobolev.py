import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycert.criteria import Exponents, RGrid
from hardycert.report import VerdictStatus
from hardycert.sobolev import (
    DiffOperatorSpec, SobolevFunction, check_full, check_homogeneous, check_multiplier,
    compute_dk, exp_decay, monomial_image, polynomial, power_exp, verify_identity,
)
from hardycert.weightlang import evaluate, parse

GRID = RGrid(1e-3, 1e3, 8)
E22 = Exponents(2, 2)
FIN, INF = VerdictStatus.FINITE, VerdictStatus.INFINITE


def op(*b):
    return DiffOperatorSpec(tuple(parse(s) for s in b))


@pytest.mark.parametrize("b, expected", [
    (("3", "0"), [lambda x: 3.0]),
    (("x", "2", "5"), [lambda x: x * x + 2, lambda x: x]),
    (("1", "x", "0", "7"), [lambda x: x ** 2 / 2 + x * x, lambda x: x + x, lambda x: 1.0]),
])
def test_reduced_coefficients(b, expected):
    dks = compute_dk(op(*b))
    assert len(dks) == len(expected)
    for dk, ref in zip(dks, expected):
        for x in (0.3, 1.7):
            assert float(evaluate(dk, x)) == pytest.approx(ref(x), rel=1e-14)


def test_spec_needs_order_one():
    with pytest.raises(ValueError):
        DiffOperatorSpec((parse("1"),))


@pytest.mark.parametrize("expr, l, taylor", [
    (exp_decay(), 3, [1.0, -1.0, 1.0]),
    (power_exp(), 2, [0.0, 1.0]),
    (polynomial([2, 0, 0, 1]), 3, [2.0, 0.0, 0.0]),
])
def test_taylor_data(expr, l, taylor):
    f = SobolevFunction(expr, l)
    np.testing.assert_allclose(f.taylor, taylor, atol=1e-12)


def test_monomial_image_matches_direct_derivatives():
    spec = op("x", "1", "x^2")
    g = monomial_image(spec, 3)
    x = np.array([0.5, 2.0])
    direct = x * x ** 3 + 3 * x ** 2 + x ** 2 * 6 * x
    np.testing.assert_allclose(g(x), direct, rtol=1e-14)


_poly = st.lists(st.integers(-3, 3), min_size=1, max_size=3)


@settings(max_examples=15, deadline=None)
@given(st.lists(_poly, min_size=2, max_size=4),
       st.sampled_from(["x^3", "exp(-x)", "x*exp(-x)"]))
def test_identity_random_operators(bs, fsrc):
    spec = DiffOperatorSpec(tuple(polynomial(c) for c in bs))
    f = SobolevFunction(parse(fsrc), spec.l)
    assert verify_identity(spec, f, np.linspace(0.1, 8.0, 12)) < 1e-7


def test_identity_rejects_wrong_order():
    with pytest.raises(ValueError):
        verify_identity(op("1", "1"), SobolevFunction(exp_decay(), 2), [1.0])


def test_homogeneous_hardy_reduction():
    rep = check_homogeneous(op("1", "0"), parse("1"), parse("1/x"), E22, GRID)
    assert rep.status is FIN
    assert rep.verdicts["S_0"].value == pytest.approx(1.0, rel=1e-6)
    assert rep.conditions["c24"]["status"] == "Finite"


def test_top_coefficient_unbounded_ratio():
    rep = check_homogeneous(op("0", "1"), parse("1"), parse("1/x"), E22, GRID)
    assert rep.status is INF and rep.failed == ["c24"]


@pytest.mark.parametrize("bl, status", [("x", INF), ("1e-3", INF), ("0", FIN)])
def test_top_coefficient_must_vanish_when_p_below_q(bl, status):
    rep = check_homogeneous(op("1", bl), parse("1"), parse("x^(-1/2-1/3)"), Exponents(2, 3),
                            GRID)
    assert (rep.conditions["c24"]["status"] == "Finite") is (status is FIN)
    if status is INF:
        assert "c24" in rep.failed and "witness" in rep.conditions["c24"]


def test_second_order_needs_doubling():
    rep = check_homogeneous(op("1", "0", "0"), parse("1"), parse("x^-2"), E22, GRID)
    assert rep.conditions["c22"]["status"] == "Finite"
    assert set(rep.verdicts) == {"S_0", "S_1"}


@pytest.mark.parametrize("v, status, value", [
    ("exp(-x)", FIN, math.sqrt(0.5)),
    ("1", INF, None),
])
def test_full_space_monomial_condition(v, status, value):
    rep = check_full(op("1", "0"), parse("1"), parse(v), E22, GRID)
    c25 = rep.conditions["c25"]
    assert c25["status"] == status.value
    if value is not None:
        assert c25["monomials"][0]["value"] == pytest.approx(value, rel=1e-8)
    else:
        assert "c25" in rep.failed and rep.status is INF


@pytest.mark.parametrize("phi, p, status, failed", [
    ("1", 2.0, FIN, []),
    ("exp(-x)", 2.0, FIN, []),
    ("x^2", 2.0, INF, ["m1"]),
    ("x", 2.0, FIN, []),
    ("1", 1.0, FIN, []),
])
def test_multiplier(phi, p, status, failed):
    rep = check_multiplier(parse(phi), parse("1"), parse("1/(1+x)"), p, GRID)
    assert rep.status is status
    assert [f for f in rep.failed if f in ("m1",)] == failed


def test_multiplier_rejects_bad_exponent():
    with pytest.raises(ValueError):
        check_multiplier(parse("1"), parse("1"), parse("1"), 0.5, GRID)
