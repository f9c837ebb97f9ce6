"""Differential operators P(x, D) = sum_m b_m(x) D^m on weighted Sobolev spaces.

Boundedness of P from W^l_{p,u} (functions with ||f^(l)||_{p,u} < inf) to
L_{q,v} reduces to Hardy-type criteria for the coefficients

    d_k(x) = sum_{m=0}^{l-1-k} b_m(x) x^(l-1-k-m) / (l-1-k-m)!,

plus a condition on the top coefficient b_l and, on the full space, on the
images of the monomials x^k, k < l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import (
    Exponents, RGrid, VerdictStatus, bk_verdict, classify_curve, doubling_constant,
    require_local_integrability, sk_constant,
)
from .errors import ConditionViolation
from .quad import QuadConfig, Status, integrate_finite, lq_norm
from .report import CertReport, jsonable
from .weightlang import Expr, Num, X, as_function, differentiate, simplify, to_source

__all__ = [
    "DiffOperatorSpec", "compute_dk", "SobolevFunction", "polynomial", "exp_decay",
    "power_exp", "verify_identity", "check_homogeneous", "check_full",
    "check_multiplier", "ZERO_THRESHOLD", "TAYLOR_POINT",
]

ZERO_THRESHOLD = 1e-12
ZERO_SAMPLES = 1000
TAYLOR_POINT = 1e-9

_IDENTITY_CFG = QuadConfig(abs_tol=1e-300, rel_tol=1e-13, max_subdivisions=4000)


def _expr(e) -> Expr:
    return e if isinstance(e, Expr) else Num(float(e))


@dataclass(frozen=True)
class DiffOperatorSpec:
    b: tuple

    def __post_init__(self):
        b = tuple(_expr(e) for e in self.b)
        if len(b) < 2:
            raise ValueError("need b_0..b_l with l >= 1")
        object.__setattr__(self, "b", b)

    @property
    def l(self) -> int:
        return len(self.b) - 1

    def apply(self, derivs, x):
        """sum_m b_m(x) f^(m)(x) given callables/Exprs for f, f', ..."""
        return sum(np.asarray(as_function(bm)(x), float) * np.asarray(as_function(derivs[m])(x), float)
                   for m, bm in enumerate(self.b))


def compute_dk(spec: DiffOperatorSpec) -> list:
    """d_0, ..., d_{l-1} as simplified expressions."""
    l = spec.l
    out = []
    for k in range(l):
        acc = None
        for m in range(l - k):
            e = l - 1 - k - m
            term = spec.b[m]
            if e >= 1:
                term = term * (X if e == 1 else X ** e)
            if e >= 2:
                term = term / math.factorial(e)
            acc = term if acc is None else acc + term
        out.append(simplify(acc))
    return out


@dataclass
class SobolevFunction:
    """A test function with symbolic derivatives up to order ``l``.

    ``taylor[k]`` stands for f^(k)(0+).  It is extrapolated linearly to 0
    from ``TAYLOR_POINT`` and twice that, which leaves an O(TAYLOR_POINT^2)
    error instead of O(TAYLOR_POINT).
    """

    expr: Expr
    l: int
    derivs: list = field(init=False)
    taylor: list = field(init=False)

    def __post_init__(self):
        d = [self.expr]
        for _ in range(self.l):
            d.append(simplify(differentiate(d[-1])))
        self.derivs = d
        pts = np.array([TAYLOR_POINT, 2 * TAYLOR_POINT])
        self.taylor = []
        for k in range(self.l):
            v1, v2 = np.broadcast_to(as_function(d[k])(pts), pts.shape)
            self.taylor.append(float(2 * v1 - v2))

    def taylor_derivative(self, x, m: int):
        """m-th derivative of T_f(x) = sum_{k<l} f^(k)(0) x^k / k!."""
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for k in range(m, self.l):
            out = out + self.taylor[k] * x ** (k - m) / math.factorial(k - m)
        return out


def polynomial(coeffs) -> Expr:
    """sum_i coeffs[i] x^i."""
    acc = Num(0.0)
    for i, c in enumerate(coeffs):
        if c:
            acc = acc + (Num(float(c)) if i == 0 else float(c) * (X if i == 1 else X ** i))
    return simplify(acc)


def exp_decay(lam: float = 1.0) -> Expr:
    from .weightlang import Exp
    return Exp(Num(-float(lam)) * X)


def power_exp(gamma: float = 1.0) -> Expr:
    from .weightlang import Exp
    return (X ** gamma) * Exp(-X)


def verify_identity(spec: DiffOperatorSpec, f: SobolevFunction, samples,
                    cfg: QuadConfig | None = None) -> float:
    """Max relative deviation between P f and its Taylor/integral splitting.

    Right-hand side: P T_f + sum_k ((-1)^k / k!) d_k(x) int_0^x t^k f^(l)(t) dt
    + b_l f^(l).  The deviation at each x is divided by the sum of the
    magnitudes of all terms, so cancellation does not inflate it.
    """
    if f.l != spec.l:
        raise ValueError("test function must carry l derivatives")
    cfg = cfg or _IDENTITY_CFG
    l = spec.l
    dks = compute_dk(spec)
    fl = as_function(f.derivs[l])
    worst = 0.0
    for x in np.atleast_1d(np.asarray(samples, float)):
        xa = np.array([x])
        lhs = float(spec.apply(f.derivs, xa)[0])
        terms = []
        for m, bm in enumerate(spec.b):
            terms.append(float(as_function(bm)(xa)[0] * f.taylor_derivative(xa, m)[0]))
        for k in range(l):
            res = integrate_finite(lambda t, k=k: t ** k * fl(t), 0.0, float(x), cfg)
            dk = float(as_function(dks[k])(xa)[0])
            terms.append((-1) ** k / math.factorial(k) * dk * res.value)
        terms.append(float(as_function(spec.b[l])(xa)[0] * fl(xa)[0]))
        rhs = math.fsum(terms)
        scale = abs(lhs) + math.fsum(abs(t) for t in terms)
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# boundedness checks

def _ratio_fn(num_factors, den):
    nf = [as_function(e) for e in num_factors]
    dfn = as_function(den)

    def h(x):
        x = np.asarray(x, float)
        with np.errstate(all="ignore"):
            out = np.ones_like(x)
            for g in nf:
                out = out * np.abs(np.broadcast_to(g(x), x.shape))
            out = out / np.abs(np.broadcast_to(dfn(x), x.shape))
        return out

    return h


def _sup_condition(h, grid: RGrid) -> tuple[dict, VerdictStatus]:
    """Verdict on ess-sup |h| over (0, inf): bounded at both grid ends."""
    r = grid.samples
    curve = h(r)
    vd = classify_curve(r, curve, grid.per_decade)
    out = vd.to_dict()
    if vd.finite:
        clean = lambda x: np.nan_to_num(h(x), nan=0.0)
        sup = lq_norm(clean, 1.0, math.inf, region=(grid.r_min, grid.r_max))
        out["value"] = max(vd.value, sup.value)
        out["rStar"] = sup.argmax if sup.value >= vd.value else vd.r_star
    return out, vd.status


def _top_coefficient(spec, u, v, exps, grid) -> tuple[dict, VerdictStatus]:
    bl = spec.b[-1]
    if exps.p < exps.q:
        xs = np.geomspace(grid.r_min, grid.r_max, ZERO_SAMPLES)
        vals = np.abs(np.broadcast_to(as_function(bl)(xs), xs.shape))
        bad = vals >= ZERO_THRESHOLD
        if bad.any():
            i = int(np.argmax(bad))
            return ({"status": VerdictStatus.INFINITE.value, "rule": "b_l == 0 required (p < q)",
                     "witness": float(xs[i]), "value": float(vals[i])}, VerdictStatus.INFINITE)
        return ({"status": VerdictStatus.FINITE.value, "rule": "b_l == 0 required (p < q)",
                 "value": 0.0}, VerdictStatus.FINITE)
    rec, st = _sup_condition(_ratio_fn([bl, v], u), grid)
    rec["rule"] = "ess sup |b_l v / u| < inf (p = q)"
    return rec, st


def _reduced_report(spec, u, v, exps, grid, cfg, kind) -> CertReport:
    l = spec.l
    conditions = {"c21": {"status": "Finite", **require_local_integrability(u, exps, grid, cfg)}}
    if l >= 2:
        dv = doubling_constant(u, l - 1, exps, grid, cfg)
        conditions["c22"] = {"n": l - 1, **dv.to_dict()}
        if not dv.finite:
            raise ConditionViolation("c22", f"doubling constant for n={l-1} is {dv.status.value}",
                                     verdict=dv)
    else:
        conditions["c22"] = {"n": 0, "status": "NotRequired"}

    dks = compute_dk(spec)
    verdicts, sk, curves = {}, [], {"r": grid.samples}
    for k, dk in enumerate(dks):
        vd = sk_constant(k, dk, u, v, exps, grid, cfg)
        verdicts[f"S_{k}"] = vd
        curves[f"F_{k}"] = vd.curve
        sk.append({"k": k, "d": to_source(dk), **vd.to_dict()})
    statuses = {f"c23:S_{k}": vd.status for k, vd in enumerate(verdicts.values())}
    conditions["c23"] = {"status": _combine(list(statuses.values())).value}

    rec, st = _top_coefficient(spec, u, v, exps, grid)
    conditions["c24"] = rec
    statuses["c24"] = st
    return CertReport(kind=kind, status=_combine(list(statuses.values())),
                      conditions=conditions, sk=sk,
                      failed=[k for k, s in statuses.items() if s is not VerdictStatus.FINITE],
                      curves=curves, verdicts=verdicts)


def _combine(statuses) -> VerdictStatus:
    if all(s is VerdictStatus.FINITE for s in statuses):
        return VerdictStatus.FINITE
    if any(s is VerdictStatus.INFINITE for s in statuses):
        return VerdictStatus.INFINITE
    return VerdictStatus.INCONCLUSIVE


def check_homogeneous(spec: DiffOperatorSpec, u, v, exps: Exponents, grid: RGrid = RGrid(),
                      cfg: QuadConfig | None = None) -> CertReport:
    """Boundedness of P on the subspace with vanishing Taylor data at 0.

    Conditions: local integrability of u^-p' (c21), doubling for n = l - 1
    when l >= 2 (c22), finite S_k for the weights (x^-k u, |d_k| v) (c23),
    and b_l == 0 if p < q or ess sup |b_l v / u| < inf if p = q (c24).
    """
    return _reduced_report(spec, u, v, exps, grid, cfg, "sobolev-homogeneous")


def monomial_image(spec: DiffOperatorSpec, k: int):
    """Callable for P(x, D) x^k = sum_{m<=k} b_m k!/(k-m)! x^(k-m)."""
    bfs = [as_function(b) for b in spec.b]

    def g(x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        for m in range(min(k, spec.l) + 1):
            c = math.factorial(k) / math.factorial(k - m)
            out = out + np.broadcast_to(bfs[m](x), x.shape) * c * x ** (k - m)
        return out

    return g


def check_full(spec: DiffOperatorSpec, u, v, exps: Exponents, grid: RGrid = RGrid(),
               cfg: QuadConfig | None = None) -> CertReport:
    """As :func:`check_homogeneous`, plus ||P(x, D) x^k||_{q,v} < inf for k < l (c25)."""
    rep = _reduced_report(spec, u, v, exps, grid, cfg, "sobolev-full")
    items = []
    sts = []
    for k in range(spec.l):
        res = lq_norm(monomial_image(spec, k), v, exps.q, cfg=cfg)
        if res.status is Status.DIVERGENT:
            st = VerdictStatus.INFINITE
        elif res.status is Status.CONVERGED:
            st = VerdictStatus.FINITE
        else:
            st = VerdictStatus.INCONCLUSIVE
        sts.append(st)
        items.append({"k": k, "status": st.value, "value": res.value, "reason": res.reason})
    st = _combine(sts)
    rep.conditions["c25"] = {"status": st.value, "monomials": items}
    if st is not VerdictStatus.FINITE:
        rep.failed.append("c25")
    rep.status = _combine([rep.status, st])
    rep.conditions = jsonable(rep.conditions)
    return rep


def check_multiplier(phi, u, v, p: float, grid: RGrid = RGrid(),
                     cfg: QuadConfig | None = None) -> CertReport:
    """Is f -> phi f bounded from W^1_{p,u} to L_{p,v}?  1 <= p <= inf.

    m1: ess sup |phi v / u| < inf.
    m2: sup_r (int_r^inf |phi' v|^p)^(1/p) (int_0^r u^-p')^(1/p') < inf,
    with the exponent p on the tail factor.
    """
    p = float(p)
    if not 1 <= p <= math.inf:
        raise ValueError("need 1 <= p <= inf")
    pc = math.inf if p == 1 else (1.0 if p == math.inf else p / (p - 1))
    phi = _expr(phi)
    rec1, st1 = _sup_condition(_ratio_fn([phi, v], u), grid)
    dphi = simplify(differentiate(phi))
    vd = bk_verdict(u, dphi * _expr(v), None, grid, cfg, p_conj=pc, q=p)
    conditions = {"m1": rec1, "m2": {"derivative": to_source(dphi), **vd.to_dict()}}
    status = _combine([st1, vd.status])
    failed = [k for k, s in (("m1", st1), ("m2", vd.status)) if s is not VerdictStatus.FINITE]
    return CertReport(kind="multiplier", status=status, conditions=conditions,
                      failed=failed, curves={"r": grid.samples, "F_m2": vd.curve},
                      verdicts={"m2": vd})
