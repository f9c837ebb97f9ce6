"""Sup-over-r criteria for weighted Hardy inequalities.

All criteria share one shape: a curve r -> F(r) = A(r) * B(r) whose supremum
over r > 0 decides boundedness.  ``A`` is the "head" factor built from the
domain weight u on (0, r), ``B`` the "tail" factor built from the target
weight on (r, inf).  The curve is sampled on a log grid and classified by the
log-log slope at both ends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConditionViolation, NegativeWeight
from .quad import DEFAULT_CONFIG, QuadConfig, ess_sup, integrate_finite, integrate_tail
from .report import CertReport, VerdictStatus, jsonable
from .weightlang import Expr, Mul, Num, Pow, X, as_function, to_source

__all__ = [
    "Exponents", "RGrid", "Verdict", "VerdictStatus", "SLOPE_TOL",
    "bk_constant", "sk_constant", "doubling_ratio", "doubling_constant",
    "hardy_certify", "scan_curve", "point_value", "classify_curve", "bk_verdict",
    "require_local_integrability",
    "SIGN_CONVENTION_NOTE",
]

SLOPE_TOL = 0.05

SIGN_CONVENTION_NOTE = (
    "S_k uses the inner factor int_0^r x^(+k p') u^(-p') dx, i.e. the weights "
    "(x^-k u, |a_k| v); the alternative x^(-k p') form disagrees with k = 0 "
    "consistency and with the substitution u -> x^-1 u"
)


@dataclass(frozen=True)
class Exponents:
    """Lebesgue exponents with 1 < p <= q <= inf (p = 1 only where allowed)."""

    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if not (1 < p < math.inf):
            raise ValueError(f"need 1 < p < inf, got p={p}")
        if not (p <= q):
            raise ValueError(f"need p <= q, got p={p}, q={q}")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def q_conj(self) -> float:
        if self.q == math.inf:
            return 1.0
        return self.q / (self.q - 1)

    @property
    def hardy_factor(self) -> float:
        """(q')^(1/p') q^(1/q), equal to 1 when q = inf."""
        if self.q == math.inf:
            return 1.0
        return self.q_conj ** (1 / self.p_conj) * self.q ** (1 / self.q)


@dataclass(frozen=True)
class RGrid:
    r_min: float = 1e-4
    r_max: float = 1e4
    per_decade: int = 16

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max < math.inf):
            raise ValueError("need 0 < r_min < r_max < inf")
        if self.per_decade < 4:
            raise ValueError("per_decade must be >= 4")

    @property
    def samples(self) -> np.ndarray:
        lo, hi = math.log10(self.r_min), math.log10(self.r_max)
        n = max(2, int(round((hi - lo) * self.per_decade)) + 1)
        xs = np.logspace(lo, hi, n)
        xs[0], xs[-1] = self.r_min, self.r_max
        return xs


@dataclass
class Verdict:
    """Classification of a sampled sup-over-r curve.

    ``slope_left``/``slope_right`` are fitted d log F / d log r at the grid
    ends.  Growth toward r -> 0 shows as ``slope_left <= -SLOPE_TOL``.
    """

    status: VerdictStatus
    value: float
    r_star: float
    slope_left: float
    slope_right: float
    r: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    curve: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    diagnostics: list = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return self.status is VerdictStatus.FINITE

    def to_dict(self) -> dict:
        return jsonable({
            "status": self.status.value,
            "value": self.value,
            "rStar": self.r_star,
            "slopeLeft": self.slope_left,
            "slopeRight": self.slope_right,
            "diagnostics": list(self.diagnostics),
        })


# ---------------------------------------------------------------------------
# curve sampling

def _scan_cfg(cfg: QuadConfig) -> QuadConfig:
    # relative accuracy only: pieces of a cumulative sum can be tiny
    return replace(cfg, abs_tol=1e-300, rel_tol=min(cfg.rel_tol, 1e-11))


def _piece_note(diag, res, where):
    if res.status.value == "MaxSubdivisions":
        msg = f"quadrature hit max subdivisions ({res.reason or 'budget'}) near {where}"
        if msg not in diag:
            diag.append(msg)


def cumulative_head(density, r: np.ndarray, cfg: QuadConfig, label: str = "c21",
                    diag: list | None = None) -> np.ndarray:
    """H[i] = int_0^{r_i} density, accumulated piecewise along ``r``.

    A divergent first piece, or a non-summable singularity in a later one,
    means the local integrability hypothesis fails.  Overflow in a later
    piece (e.g. e^{2x} for large x) only makes H numerically infinite from
    there on.
    """
    diag = diag if diag is not None else []
    H = np.empty(len(r))
    res = integrate_finite(density, 0.0, float(r[0]), cfg)
    if res.divergent:
        raise ConditionViolation(
            label, f"int_0^r of the head density diverges for r={r[0]:g} ({res.reason})")
    _piece_note(diag, res, f"(0, {r[0]:g})")
    acc = res.value
    H[0] = acc
    for i in range(1, len(r)):
        res = integrate_finite(density, float(r[i - 1]), float(r[i]), cfg)
        if res.divergent:
            if res.reason != "overflow":
                raise ConditionViolation(
                    label, f"head density not integrable near ({r[i-1]:g}, {r[i]:g})")
            H[i:] = math.inf
            diag.append(f"head integral overflows beyond r={r[i-1]:g}")
            break
        _piece_note(diag, res, f"({r[i-1]:g}, {r[i]:g})")
        acc += res.value
        H[i] = acc
    return H


def _head_factor(ufn, pc: float, r, cfg, label, diag):
    if pc == math.inf:
        inv = lambda x: 1.0 / np.abs(ufn(x))
        with np.errstate(divide="ignore"):
            cur = ess_sup(inv, (0.0, float(r[0]))).value
            out = np.empty(len(r))
            out[0] = cur
            for i in range(1, len(r)):
                cur = max(cur, ess_sup(inv, (float(r[i - 1]), float(r[i])), n=64).value)
                out[i] = cur
        return out

    def density(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.abs(ufn(x)) ** (-pc)

    H = cumulative_head(density, r, cfg, label, diag)
    return H ** (1.0 / pc)


def _tail_factor(wfn, q: float, r, cfg, diag):
    n = len(r)
    if q == math.inf:
        absw = lambda x: np.abs(wfn(x))
        out = np.empty(n)
        res = ess_sup(absw, (float(r[-1]), math.inf))
        cur = res.value
        out[-1] = cur
        for i in range(n - 2, -1, -1):
            cur = max(cur, ess_sup(absw, (float(r[i]), float(r[i + 1])), n=64).value)
            out[i] = cur
        return out

    def density(x):
        with np.errstate(over="ignore"):
            return np.abs(wfn(x)) ** q

    J = np.empty(n)
    res = integrate_tail(density, float(r[-1]), cfg)
    if res.divergent:
        diag.append(f"tail integral diverges beyond r={r[-1]:g} ({res.reason})")
        return np.full(n, math.inf)
    _piece_note(diag, res, f"({r[-1]:g}, inf)")
    acc = res.value
    J[-1] = acc
    for i in range(n - 2, -1, -1):
        res = integrate_finite(density, float(r[i]), float(r[i + 1]), cfg)
        if res.divergent:
            J[: i + 1] = math.inf
            diag.append(f"tail integral diverges near ({r[i]:g}, {r[i+1]:g})")
            break
        _piece_note(diag, res, f"({r[i]:g}, {r[i+1]:g})")
        acc += res.value
        J[i] = acc
    return J ** (1.0 / q)


def scan_curve(u, w, p_conj: float, q: float, r: np.ndarray,
               cfg: QuadConfig | None = None, label: str = "c21"):
    """Sample F(r) = (int_0^r u^-p')^(1/p') * (int_r^inf |w|^q)^(1/q).

    Infinite exponents switch the corresponding factor to an ess-sup.
    Returns ``(F, head, tail, diagnostics)``.  Undefined products such as
    0 * inf are NaN, and so are samples where only the head integral
    overflowed: those carry no information about growth.
    """
    cfg = _scan_cfg(cfg or DEFAULT_CONFIG)
    diag: list[str] = []
    r = np.asarray(r, dtype=float)
    A = _head_factor(as_function(u), p_conj, r, cfg, label, diag)
    B = _tail_factor(as_function(w), q, r, cfg, diag)
    with np.errstate(invalid="ignore", over="ignore"):
        F = A * B
    F[(B == 0) & np.isfinite(A)] = 0.0
    F[(B == 0) & np.isinf(A)] = math.nan
    F[(A == 0) & np.isinf(B)] = math.nan
    F[np.isinf(A) & np.isfinite(B)] = math.nan
    return F, A, B, diag


def point_value(u, w, p_conj: float, q: float, r: float,
                cfg: QuadConfig | None = None) -> float:
    """F at a single r, integrating both factors directly."""
    cfg = _scan_cfg(cfg or DEFAULT_CONFIG)
    ufn, wfn = as_function(u), as_function(w)
    with np.errstate(divide="ignore", over="ignore"):
        if p_conj == math.inf:
            A = ess_sup(lambda x: 1.0 / np.abs(ufn(x)), (0.0, r)).value
        else:
            A = integrate_finite(lambda x: np.abs(ufn(x)) ** (-p_conj), 0.0, r, cfg).value
            A = A ** (1 / p_conj)
        if q == math.inf:
            B = ess_sup(lambda x: np.abs(wfn(x)), (r, math.inf)).value
        else:
            B = integrate_tail(lambda x: np.abs(wfn(x)) ** q, r, cfg).value ** (1 / q)
    if B == 0:
        return 0.0
    return A * B


def _refine_peak(vd: Verdict, fn) -> None:
    """Golden-section search for the sup between the grid neighbours of r*."""
    r = vd.r
    j = int(np.searchsorted(r, vd.r_star))
    if not (0 < j < len(r) - 1) or not vd.value > 0:
        return
    a, b = math.log(r[j - 1]), math.log(r[j + 1])
    gr = (math.sqrt(5) - 1) / 2
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = fn(math.exp(c)), fn(math.exp(d))
    for _ in range(40):
        if not (math.isfinite(fc) and math.isfinite(fd)):
            return
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = fn(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = fn(math.exp(d))
        if b - a < 1e-9:
            break
    best, t = (fc, c) if fc > fd else (fd, d)
    if math.isfinite(best) and best > vd.value:
        vd.value, vd.r_star = best, math.exp(t)


# ---------------------------------------------------------------------------
# classification

def _end_slope(lr, F, idx, right: bool) -> float:
    vals = F[idx]
    if np.all(vals > 0):
        return float(np.polyfit(lr[idx], np.log(vals), 1)[0])
    end = vals[-1] if right else vals[0]
    if end == 0:
        return -math.inf if right else math.inf  # decaying to 0 at that end
    return math.inf if right else -math.inf


def _monotone(vals, increasing: bool) -> bool:
    d = np.diff(vals)
    tol = 1e-9 * np.maximum(np.abs(vals[1:]), np.abs(vals[:-1]))
    return bool(np.all(d >= -tol)) if increasing else bool(np.all(d <= tol))


def classify_curve(r, F, per_decade: int, diagnostics=None,
                   slope_tol: float = SLOPE_TOL) -> Verdict:
    """Finite / Infinite / Inconclusive from a sampled curve.

    Infinite: an end slope points outward at >= ``slope_tol`` and the curve
    grows monotonically over the last decade toward that end, or the curve
    is already infinite there.  Inconclusive: outward growth without
    monotonicity.  Finite otherwise (decaying, flat or interior-peaked);
    NaN samples (0 * inf) are ignored.
    """
    r = np.asarray(r, float)
    F = np.asarray(F, float)
    diag = list(diagnostics or [])
    lr = np.log(r)
    finite = np.isfinite(F)
    posinf = np.isposinf(F)
    fidx = np.nonzero(finite)[0]

    def make(status, value, r_star, sl, sr):
        return Verdict(status, value, r_star, sl, sr, r, F, diag)

    if len(fidx) < 2:
        if posinf.any():
            diag.append("curve infinite on the whole grid")
            return make(VerdictStatus.INFINITE, math.inf, float(r[np.argmax(posinf)]),
                        math.nan, math.nan)
        diag.append("too few finite samples")
        return make(VerdictStatus.INCONCLUSIVE, math.nan, math.nan, math.nan, math.nan)

    i0, i1 = fidx[0], fidx[-1]
    if np.all(F[fidx] == 0):
        return make(VerdictStatus.FINITE, 0.0, float(r[i0]), 0.0, 0.0)

    w_slope = max(3, per_decade // 2 + 1)
    w_mono = per_decade + 1
    right_idx = fidx[-w_slope:]
    left_idx = fidx[:w_slope]
    sr = _end_slope(lr, F, right_idx, right=True)
    sl = _end_slope(lr, F, left_idx, right=False)

    inf_right = bool(posinf[i1 + 1:].any())
    inf_left = bool(posinf[:i0].any())
    grow_right = sr >= slope_tol or inf_right
    grow_left = sl <= -slope_tol or inf_left
    mono_right = _monotone(F[fidx[-w_mono:]], increasing=True)
    mono_left = _monotone(F[fidx[:w_mono]], increasing=False)
    if inf_right:
        diag.append(f"curve overflows beyond r={r[i1]:g}")
    if inf_left:
        diag.append(f"curve overflows below r={r[i0]:g}")

    if (grow_right and mono_right) or (grow_left and mono_left):
        side = "right" if grow_right and mono_right else "left"
        diag.append(f"monotone growth toward the {side} end of the grid")
        r_star = float(r[i1]) if side == "right" else float(r[i0])
        return make(VerdictStatus.INFINITE, math.inf, r_star, sl, sr)

    j = fidx[np.argmax(F[fidx])]
    value, r_star = float(F[j]), float(r[j])
    if grow_right or grow_left:
        diag.append("curve still rising at a grid end but not monotone")
        return make(VerdictStatus.INCONCLUSIVE, value, r_star, sl, sr)
    if posinf.any():
        diag.append("isolated infinite samples inside the grid")
        return make(VerdictStatus.INCONCLUSIVE, value, r_star, sl, sr)
    return make(VerdictStatus.FINITE, value, r_star, sl, sr)


# ---------------------------------------------------------------------------
# public criteria

def _check_nonnegative(named: dict, xs: np.ndarray) -> None:
    for name, e in named.items():
        vals = np.asarray(as_function(e)(xs), dtype=float)
        vals = np.broadcast_to(vals, xs.shape)
        neg = vals < 0
        if neg.any():
            i = int(np.argmax(neg))
            raise NegativeWeight(name, float(xs[i]), float(vals[i]))


def _probe_points(grid: RGrid) -> np.ndarray:
    r = grid.samples
    return np.unique(np.concatenate([r, np.sqrt(r[1:] * r[:-1])]))


def bk_verdict(u, w, exps: Exponents | None, grid: RGrid, cfg: QuadConfig | None = None,
               p_conj: float | None = None, q: float | None = None) -> Verdict:
    """Shared path for S and S_k: sup_r (int_r^inf |w|^q)^(1/q) (int_0^r u^-p')^(1/p').

    ``p_conj``/``q`` override ``exps`` (used where p = 1 or p = inf is allowed).
    """
    pc = exps.p_conj if p_conj is None else p_conj
    qq = exps.q if q is None else q
    r = grid.samples
    F, _, _, diag = scan_curve(u, w, pc, qq, r, cfg)
    vd = classify_curve(r, F, grid.per_decade, diag)
    if vd.finite:
        _refine_peak(vd, lambda x: point_value(u, w, pc, qq, x, cfg))
    return vd


def bk_constant(u, v, exps: Exponents, grid: RGrid = RGrid(),
                cfg: QuadConfig | None = None) -> Verdict:
    """Verdict on S = sup_r (int_r^inf v^q)^(1/q) (int_0^r u^-p')^(1/p')."""
    _check_nonnegative({"u": u, "v": v}, _probe_points(grid))
    return bk_verdict(u, v, exps, grid, cfg)


def _shifted_weights(k: int, a, u, v):
    u_k = u if k == 0 else Mul(Pow(X, float(-k)), _as_expr(u))
    v_k = Mul(_as_expr(a), _as_expr(v))
    return u_k, v_k


def _as_expr(e):
    if isinstance(e, Expr):
        return e
    return Num(float(e))


def sk_constant(k: int, a, u, v, exps: Exponents, grid: RGrid = RGrid(),
                cfg: QuadConfig | None = None) -> Verdict:
    """Verdict on S_k: the S criterion for the weights (x^-k u, |a_k| v)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    _check_nonnegative({"u": u, "v": v}, _probe_points(grid))
    u_k, v_k = _shifted_weights(k, a, u, v)
    return bk_verdict(u_k, v_k, exps, grid, cfg)


def _doubling_density(u, n: int, pc: float):
    ufn = as_function(u)
    power = (n - 1) * pc

    def density(x):
        with np.errstate(divide="ignore", over="ignore"):
            return x ** power * np.abs(ufn(x)) ** (-pc)

    return density


def doubling_ratio(u, n: int, exps: Exponents, r_values, cfg: QuadConfig | None = None
                   ) -> np.ndarray:
    """int_0^{2r} x^((n-1)p') u^-p' / int_0^r (same), at each r in ``r_values``."""
    r_values = np.asarray(r_values, dtype=float)
    pts = np.unique(np.concatenate([r_values, 2 * r_values]))
    H = cumulative_head(_doubling_density(u, n, exps.p_conj), pts,
                        _scan_cfg(cfg or DEFAULT_CONFIG), "c21")
    h1 = H[np.searchsorted(pts, r_values)]
    h2 = H[np.searchsorted(pts, 2 * r_values)]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = h2 / h1
    # an overflowed numerator says nothing about the true ratio
    ratio[np.isinf(h1) | np.isinf(h2)] = math.nan
    return ratio


def doubling_constant(u, n: int, exps: Exponents, grid: RGrid = RGrid(),
                      cfg: QuadConfig | None = None) -> Verdict:
    """Verdict on the doubling constant D(u) for the density x^((n-1)p') u^-p'."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _check_nonnegative({"u": u}, _probe_points(grid))
    r = grid.samples
    ratio = doubling_ratio(u, n, exps, r, cfg)
    return classify_curve(r, ratio, grid.per_decade)


def require_local_integrability(u, exps, grid, cfg) -> dict:
    """Integrability of u^-p' near 0, checked on (0, r_min) and (0, r_max)."""
    pc = exps.p_conj
    ufn = as_function(u)

    def density(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.abs(ufn(x)) ** (-pc)

    out = {}
    for name, rr in (("rMin", grid.r_min), ("rMax", grid.r_max)):
        res = integrate_finite(density, 0.0, rr, _scan_cfg(cfg or DEFAULT_CONFIG))
        if res.divergent and (rr == grid.r_min or res.reason != "overflow"):
            raise ConditionViolation("c21", f"int_0^r u^-p' diverges at r={rr:g} ({res.reason})")
        out[name] = {"r": rr, "value": res.value, "status": res.status.value}
    return out


def hardy_certify(a: list, u, v, exps: Exponents, grid: RGrid = RGrid(),
                  cfg: QuadConfig | None = None) -> CertReport:
    """Certify ||sum_k a_k(x) int_0^x t^k f(t) dt||_{q,v} <= c ||f||_{p,u}.

    Local integrability and (for n >= 1) the doubling condition are checked
    first; a failure raises :class:`ConditionViolation` carrying the
    evidence.  The upper bound on the best constant is
    hardy_factor * sum_k S_k.
    """
    if not a:
        raise ValueError("need at least one coefficient")
    n = len(a) - 1
    _check_nonnegative({"u": u, "v": v}, _probe_points(grid))
    conditions = {"c21": {"status": "Finite", **require_local_integrability(u, exps, grid, cfg)}}
    if n >= 1:
        dv = doubling_constant(u, n, exps, grid, cfg)
        conditions["c22"] = {"n": n, **dv.to_dict()}
        if not dv.finite:
            raise ConditionViolation(
                "c22", f"doubling constant for n={n} is {dv.status.value}", verdict=dv)
    else:
        conditions["c22"] = {"n": 0, "status": "NotRequired"}

    verdicts = {}
    sk = []
    curves = {"r": grid.samples}
    for k, ak in enumerate(a):
        vd = sk_constant(k, ak, u, v, exps, grid, cfg)
        verdicts[f"S_{k}"] = vd
        curves[f"F_{k}"] = vd.curve
        sk.append({"k": k, "a": to_source(_as_expr(ak)), **vd.to_dict()})

    statuses = [vd.status for vd in verdicts.values()]
    if all(s is VerdictStatus.FINITE for s in statuses):
        status = VerdictStatus.FINITE
        upper = exps.hardy_factor * math.fsum(vd.value for vd in verdicts.values())
    elif any(s is VerdictStatus.INFINITE for s in statuses):
        status, upper = VerdictStatus.INFINITE, math.inf
    else:
        status, upper = VerdictStatus.INCONCLUSIVE, None
    failed = [f"S_{k}" for k, s in enumerate(statuses) if s is not VerdictStatus.FINITE]
    return CertReport(
        kind="certify", status=status, conditions=conditions, sk=sk,
        upper_bound=upper, cross_ref=None, banner=[SIGN_CONVENTION_NOTE],
        failed=failed, curves=curves, verdicts=verdicts,
    )
