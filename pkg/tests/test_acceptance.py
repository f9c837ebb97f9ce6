"""Acceptance suite.  Each test carries ``@pytest.mark.criterion(n)``; the
terminal summary prints one PASS/FAIL line per criterion."""
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardycert.cli import main
from hardycert.criteria import (
    Exponents, RGrid, bk_constant, doubling_constant, doubling_ratio, hardy_certify,
    sk_constant,
)
from hardycert.errors import ConditionViolation
from hardycert.extremal import construct_flat_function, sharp_distance, solve_extremal
from hardycert.opnorm import (
    OperatorSpec, discretize, domain_sweep, growth_class, norm_lower_bound,
)
from hardycert.report import VerdictStatus
from hardycert.sobolev import (
    DiffOperatorSpec, SobolevFunction, check_full, check_homogeneous, polynomial,
    verify_identity,
)
from hardycert.weightlang import parse

from oracles import (
    WEIGHTS, monic_objective, moment_roots, orthogonality_residuals, signed_moments,
    taylor_flat,
)

FIN, INF, INC = VerdictStatus.FINITE, VerdictStatus.INFINITE, VerdictStatus.INCONCLUSIVE
E22 = Exponents(2, 2)
GRID = RGrid(1e-4, 1e4, 16)


def criterion(n):
    return pytest.mark.criterion(n)


# ---------------------------------------------------------------------------
# 1: u = 1, v = 1/x, p = q = 2

@pytest.fixture(scope="module")
def hardy_run():
    t0 = time.perf_counter()
    S = bk_constant(parse("1"), parse("x^-1"), E22, GRID)
    spec = OperatorSpec([parse("1")], parse("1"), parse("x^-1"), E22)
    est = norm_lower_bound(discretize(spec, 4096, (1e-4, 1e4)))
    return S, est, time.perf_counter() - t0


@criterion(1)
def test_c1_hardy_constant(hardy_run):
    S, _, _ = hardy_run
    assert S.status is FIN
    assert abs(S.value - 1.0) < 1e-6


@criterion(1)
def test_c1_sandwich_and_runtime(hardy_run):
    S, est, elapsed = hardy_run
    upper = E22.hardy_factor * S.value
    assert upper == pytest.approx(2.0, abs=2e-6)
    assert S.value <= est.lower_bound <= upper
    assert elapsed < 60


@criterion(1)
def test_c1_lower_bound_within_two_percent(hardy_run):
    _, est, _ = hardy_run
    assert abs(est.lower_bound - 2.0) / 2.0 < 0.02, f"lower bound {est.lower_bound:.6f}"


# ---------------------------------------------------------------------------
# 2: u = 1, v = e^-x, p = 2, q = inf

@criterion(2)
def test_c2_sup_target_equality():
    t0 = time.perf_counter()
    exps = Exponents(2, math.inf)
    S = bk_constant(parse("1"), parse("exp(-x)"), exps, GRID)
    # sup_r e^-r sqrt(r) is attained at r = 1/2
    assert S.value == pytest.approx(math.exp(-0.5) / math.sqrt(2), rel=1e-6)
    spec = OperatorSpec([parse("1")], parse("1"), parse("exp(-x)"), exps)
    est = norm_lower_bound(discretize(spec, 4096, (1e-4, 1e4)))
    assert abs(est.lower_bound - S.value) / S.value < 0.05
    assert time.perf_counter() - t0 < 60


# ---------------------------------------------------------------------------
# 3: u = v = e^-x, p = q = 2, a = (x, -1)

EXP = parse("exp(-x)")


@criterion(3)
def test_c3a_doubling_infinite():
    t0 = time.perf_counter()
    assert doubling_constant(EXP, 1, E22, GRID).status is INF
    r = 2.0 ** np.arange(7)
    ratio = doubling_ratio(EXP, 1, E22, r)
    np.testing.assert_allclose(ratio, (np.exp(4 * r) - 1) / (np.exp(2 * r) - 1), rtol=1e-8)
    assert np.all(ratio[1:] / ratio[:-1] >= 1.5)
    assert time.perf_counter() - t0 < 120


@criterion(3)
@pytest.mark.parametrize("k, a", [(0, "x"), (1, "-1")])
def test_c3b_separate_terms_infinite(k, a):
    vd = sk_constant(k, parse(a), EXP, EXP, E22, GRID)
    assert vd.status is INF
    assert vd.slope_right > 0


@criterion(3)
def test_c3c_combined_operator_bounded():
    t0 = time.perf_counter()
    spec = OperatorSpec([parse("x"), parse("-1")], EXP, EXP, E22)
    ests, var = domain_sweep(spec, [(1e-4, R) for R in (10.0, 20.0, 40.0)],
                             per_decade=2048 / 5)
    assert all(v < 0.05 for v in var), var
    assert all(e.lower_bound > 0 for e in ests)
    assert time.perf_counter() - t0 < 120


# ---------------------------------------------------------------------------
# 4: u = x^alpha, v = x^beta, a = (1, x^-1); beta = alpha - 1 balances both terms

ALPHAS = (-0.6, -0.4, -0.2, 0.0, 0.2)
OFFSETS = (-0.3, -0.15, 0.0, 0.15, 0.3)


@criterion(4)
@pytest.mark.parametrize("offset", OFFSETS)
@pytest.mark.parametrize("alpha", ALPHAS)
def test_c4_verdict_matches_norm_growth(alpha, offset):
    beta = alpha - 1 + offset
    u, v = parse(f"x^({alpha!r})"), parse(f"x^({beta!r})")
    a = [parse("1"), parse("x^-1")]
    rep = hardy_certify(a, u, v, E22, RGrid(1e-3, 1e3, 16))
    if rep.status is INC:
        pytest.skip("verdict inconclusive")
    spec = OperatorSpec(a, u, v, E22)
    doms = [(1e-2 / 2 ** j, 1e2 * 2 ** j) for j in range(4)]
    ests, var = domain_sweep(spec, doms, per_decade=64)
    cls = growth_class(var)
    expected = "bounded" if rep.status is FIN else "growing"
    assert cls == expected, (rep.status, var)
    if rep.status is FIN:
        assert max(e.lower_bound for e in ests) <= rep.upper_bound * (1 + 1e-9)


# ---------------------------------------------------------------------------
# 5: extremal polynomials

EXTREMAL_CASES = [(n, s, w, r) for n in (1, 2, 3, 4) for s in (1.5, 2.0, 3.0)
                  for w in ("1", "x", "exp(-x)") for r in (1.0, 10.0)]


@criterion(5)
@pytest.mark.parametrize("n, s, w, r", EXTREMAL_CASES)
def test_c5_extremal_polynomial(n, s, w, r):
    poly = solve_extremal(n, s, parse(w), r)
    x = poly.roots
    assert np.isrealobj(x) and len(x) == n
    assert 0 < x[0] and x[-1] < r and np.all(np.diff(x) > 1e-10 * r)
    assert np.max(np.abs(poly.residuals)) < 1e-8
    assert np.max(np.abs(orthogonality_residuals(x, s, WEIGHTS[w], r))) < 1e-8
    if s == 2.0:
        np.testing.assert_allclose(x, moment_roots(n, WEIGHTS[w], r), rtol=1e-6)
    # perturbing any lower coefficient, or a random direction, raises the objective
    low = poly.coefficients[1:][::-1]
    base = monic_objective(low, n, s, WEIGHTS[w], r)
    scale = r ** (n - np.arange(n))
    dirs = [np.eye(n)[j] for j in range(n)]
    dirs += list(np.random.default_rng(n).standard_normal((2, n)))
    for d in dirs:
        for sign in (1.0, -1.0):
            moved = monic_objective(low + sign * 1e-3 * d * scale, n, s, WEIGHTS[w], r)
            assert moved > base


@criterion(5)
def test_c5_runtime():
    t0 = time.perf_counter()
    for n, s, w, r in EXTREMAL_CASES:
        solve_extremal(n, s, parse(w), r)
    assert time.perf_counter() - t0 < 120


# ---------------------------------------------------------------------------
# 6: sharp distance of 1 to span{t, ..., t^n} in L_{p', u^-p'}(0, r)

SHARP_CASES = [(n, p, u, r) for n in (1, 2, 3) for p in (1.5, 2.0, 3.0)
               for u in ("1", "x^(1/2)") for r in (1.0, 5.0)]


def _integrable(p, u):
    # u^-p' = x^(-p'/2) for u = x^(1/2) is integrable at 0 iff p' < 2
    return u == "1" or p / (p - 1) < 2


@criterion(6)
@pytest.mark.parametrize("n, p, u, r", SHARP_CASES)
def test_c6_sharp_distance(n, p, u, r):
    if not _integrable(p, u):
        with pytest.raises(ConditionViolation) as info:
            sharp_distance(n, p, parse(u), r)
        assert info.value.condition == "c21"
        return
    sd = sharp_distance(n, p, parse(u), r)
    assert sd.discrepancy < 1e-5, (sd.value, sd.value_direct)
    assert sd.lower_bound_holds, (sd.value, sd.lower_bound)


# ---------------------------------------------------------------------------
# 7: flat functions on [1, 2]

@criterion(7)
@pytest.mark.parametrize("l", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("w", ["1", "x", "exp(-x)"])
def test_c7_flat_function(w, l):
    g = construct_flat_function(parse(w), 1.0, 2.0, l)
    signed, total = signed_moments(WEIGHTS[w], g.sigma.pieces(), l)
    assert np.max(np.abs(signed) / total) < 1e-8
    xs = np.linspace(1.0, 2.0, 102)[1:-1]
    np.testing.assert_allclose(np.abs(g.derivative(xs, l)), WEIGHTS[w](xs), rtol=0, atol=1e-10)
    for j in range(l):
        assert abs(g.derivative(1.0, j)) < 1e-8
        assert abs(g.derivative(2.0, j)) < 1e-8
        assert abs(taylor_flat(WEIGHTS[w], g.sigma.pieces(), l, 2.0, j)) < 1e-8


# ---------------------------------------------------------------------------
# 8: identity P f = P T_f + sum_k (-1)^k/k! d_k int_0^x t^k f^(l) + b_l f^(l)

def _random_specs(count=20, seed=8):
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(count):
        l = int(rng.integers(1, 4))
        b = tuple(polynomial(np.round(rng.normal(size=int(rng.integers(1, 4))), 3))
                  for _ in range(l + 1))
        specs.append(DiffOperatorSpec(b))
    return specs


@criterion(8)
@pytest.mark.parametrize("spec", _random_specs(), ids=lambda s: f"l{s.l}")
@pytest.mark.parametrize("fsrc", ["x^3", "exp(-x)", "x*exp(-x)"])
def test_c8_identity(spec, fsrc):
    f = SobolevFunction(parse(fsrc), spec.l)
    assert verify_identity(spec, f, np.linspace(0.05, 10.0, 25)) < 1e-7


# ---------------------------------------------------------------------------
# 9: reductions for differential operators

@criterion(9)
def test_c9_hardy_reduction_finite():
    rep = check_homogeneous(DiffOperatorSpec((parse("1"), parse("0"))), parse("1"),
                            parse("x^-1"), E22, GRID)
    assert rep.status is FIN
    assert rep.verdicts["S_0"].value == pytest.approx(1.0, abs=1e-6)


@criterion(9)
def test_c9_pure_derivative_cites_top_coefficient():
    # b_1 v / u = 1/x is unbounded, so f -> f' is not bounded into L_{2, 1/x}
    rep = check_homogeneous(DiffOperatorSpec((parse("0"), parse("1"))), parse("1"),
                            parse("x^-1"), E22, GRID)
    assert rep.status is INF and rep.failed == ["c24"]


_coef = st.lists(st.integers(-3, 3), min_size=1, max_size=3)


@criterion(9)
@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.data(), st.floats(1.2, 3.0), st.floats(0.1, 2.0))
def test_c9_top_coefficient_rejected_when_p_below_q(l, data, p, dq):
    q = p + dq
    b = [polynomial(data.draw(_coef)) for _ in range(l)]
    top = data.draw(_coef.filter(any))
    spec = DiffOperatorSpec((*b, polynomial(top)))
    pc = p / (p - 1)
    v = parse(f"x^({-1 / pc - 1 / q!r})")
    rep = check_homogeneous(spec, parse("1"), v, Exponents(p, q), RGrid(1e-2, 1e2, 8))
    assert "c24" in rep.failed and rep.status is not FIN


@criterion(9)
def test_c9_full_space_rejects_unit_target_weight(tmp_path, capsys):
    rep = check_full(DiffOperatorSpec((parse("1"), parse("0"))), parse("1"), parse("1"),
                     E22, GRID)
    assert "c25" in rep.failed and rep.status is INF
    from pathlib import Path
    problem = Path(__file__).resolve().parent.parent / "problems" / "full_unweighted.toml"
    assert main(["sobolev", str(problem), "--full", "--out", str(tmp_path)]) == 2
    assert "c25" in capsys.readouterr().err


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
