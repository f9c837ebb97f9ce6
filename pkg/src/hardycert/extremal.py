"""Extremal polynomials, sharp distances to polynomial subspaces, and
sign/flat functions with vanishing weighted moments.

The extremal polynomial P of degree n on (0, r) is monic, is stored by its
roots, and satisfies

    int_0^r |P|^(s-1) sign(P) x^k w dx = 0,   k = 1..n.

These are the stationarity conditions of ``int_0^r |P|^s x w -> min`` over
monic P.  They are also the conditions for ``int_0^r |Q|^s w -> min`` over
Q with Q(0) = 1.  Hence that second minimiser is Q(t) = prod(1 - t/x_i)
with the same roots.  :func:`sharp_distance` uses this mapping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import roots_jacobi, roots_legendre

from .errors import ConditionViolation, InvalidWeight, NoConvergence
from .quad import QuadConfig, integrate_finite
from .weightlang import as_function

__all__ = [
    "ExtremalPoly", "solve_extremal", "RootBoundReport", "verify_root_bound",
    "SharpDistance", "sharp_distance", "SignPattern", "construct_sign_function",
    "FlatFunction", "construct_flat_function", "orthogonal_roots",
]

JACOBI_ORDER = 40
GRADED_LEVELS = 200
GRADED_POINTS = 10
MAX_S_STEP = 0.25

_TIGHT = QuadConfig(abs_tol=1e-300, rel_tol=1e-13, max_subdivisions=4000)


# ---------------------------------------------------------------------------
# quadrature rules adapted to the roots of P

@lru_cache(maxsize=64)
def _jacobi(order: int, alpha: float, beta: float):
    t, wt = roots_jacobi(order, alpha, beta)
    return t, wt


@lru_cache(maxsize=8)
def _legendre(order: int):
    return roots_legendre(order)


def _graded(a: float, levels: int = GRADED_LEVELS, pts: int = GRADED_POINTS):
    """Gauss-Legendre on dyadic cells [a 2^-(j+1), a 2^-j] accumulating at 0."""
    t, wt = _legendre(pts)
    hi = a * 2.0 ** -np.arange(levels)
    lo = hi / 2
    c = (0.5 * (hi + lo))[:, None]
    h = (0.5 * (hi - lo))[:, None]
    return (c + h * t).ravel(), (h * wt).ravel()


def _others_power(x, roots, skip, e):
    out = np.ones_like(x)
    if e == 0:
        return out
    for j, xj in enumerate(roots):
        if j not in skip:
            out *= np.abs(x - xj) ** e
    return out


def root_rule(roots, r: float, e: float, order: int = JACOBI_ORDER):
    """Nodes, weights and sign(P) such that sum(W g(X)) ~ int_0^r |P|^e g.

    Between consecutive roots the factor |x - root|^e is absorbed into a
    Gauss-Jacobi weight; the cell next to 0 uses a graded mesh so weights
    singular at 0 are handled.
    """
    roots = np.asarray(roots, dtype=float)
    n = len(roots)
    X, W = [], []
    # (0, x1/2]: no root nearby
    a = roots[0] / 2
    xg, wg = _graded(a)
    X.append(xg)
    W.append(wg * np.abs(np.prod(xg[:, None] - roots[None, :], axis=1)) ** e)
    # [x1/2, x1]: root at the right end
    t, wt = _jacobi(order, e, 0.0)
    c, h = 0.5 * (a + roots[0]), 0.5 * (roots[0] - a)
    x = c + h * t
    X.append(x)
    W.append(h ** (1 + e) * wt * _others_power(x, roots, {0}, e))
    # [x_i, x_{i+1}]: roots at both ends
    if n > 1:
        t, wt = _jacobi(order, e, e)
        for i in range(n - 1):
            lo, hi = roots[i], roots[i + 1]
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
            x = c + h * t
            X.append(x)
            W.append(h ** (1 + 2 * e) * wt * _others_power(x, roots, {i, i + 1}, e))
    # [x_n, r]: root at the left end
    t, wt = _jacobi(order, 0.0, e)
    c, h = 0.5 * (roots[-1] + r), 0.5 * (r - roots[-1])
    x = c + h * t
    X.append(x)
    W.append(h ** (1 + e) * wt * _others_power(x, roots, {n - 1}, e))
    X = np.concatenate(X)
    W = np.concatenate(W)
    sign = np.where((n - np.searchsorted(roots, X)) % 2 == 0, 1.0, -1.0)
    return X, W, sign


def _plain_rule(r: float, panels: int = 64, pts: int = 20):
    """Rule for int_0^r g: graded near 0, uniform Gauss-Legendre elsewhere."""
    xg, wg = _graded(r / panels)
    t, wt = _legendre(pts)
    edges = np.linspace(r / panels, r, panels)
    c = (0.5 * (edges[1:] + edges[:-1]))[:, None]
    h = (0.5 * (edges[1:] - edges[:-1]))[:, None]
    return np.concatenate([xg, (c + h * t).ravel()]), np.concatenate([wg, (h * wt).ravel()])


def _weight_values(w, x):
    vals = np.asarray(as_function(w)(x), dtype=float)
    vals = np.broadcast_to(vals, np.shape(x))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        i = int(np.argmax(~np.isfinite(vals) | (vals <= 0)))
        raise InvalidWeight(f"weight must be positive and finite, got {vals[i]!r} at x={x[i]!r}")
    return vals


# ---------------------------------------------------------------------------
# extremal polynomial

@dataclass
class ExtremalPoly:
    n: int
    s: float
    r: float
    roots: np.ndarray
    residuals: np.ndarray
    objective: float
    iterations: int = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.prod(x[..., None] - self.roots, axis=-1)

    @property
    def coefficients(self) -> np.ndarray:
        """Monic coefficients, highest degree first."""
        return np.poly(self.roots)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "s": self.s, "r": self.r,
            "roots": [float(v) for v in self.roots],
            "residuals": [float(v) for v in self.residuals],
            "objective": float(self.objective),
        }


def _residuals(roots, s, wfun, r):
    """Orthogonality residuals normalised by int |P|^(s-1) x^k w, k = 1..n."""
    X, W, sg = root_rule(roots, r, s - 1)
    wx = W * wfun(X)
    xs = X / r
    n = len(roots)
    powers = xs[None, :] ** np.arange(1, n + 1)[:, None]
    num = powers @ (wx * sg)
    den = powers @ wx
    return num / den


def _objective(roots, s, wfun, r, extra_x: bool = True):
    X, W, _ = root_rule(roots, r, s)
    g = wfun(X) * (X if extra_x else 1.0)
    return float(np.sum(W * g))


def orthogonal_roots(n: int, w, r: float, extra_x: bool = True) -> np.ndarray:
    """Roots of the degree-n orthogonal polynomial for x w(x) dx on (0, r).

    Discretised Stieltjes procedure followed by the eigenvalues of the
    Jacobi matrix.  This is the s = 2 extremal polynomial.
    """
    X, Wq = _plain_rule(r)
    mu = Wq * _weight_values(w, X) * (X if extra_x else 1.0)
    xs = X / r
    alpha = np.zeros(n)
    beta = np.zeros(n)
    p_prev = np.zeros_like(xs)
    p = np.ones_like(xs)
    norm_prev = 1.0
    for k in range(n):
        norm = float(np.sum(mu * p * p))
        alpha[k] = float(np.sum(mu * xs * p * p)) / norm
        if k > 0:
            beta[k] = norm / norm_prev
        p_prev, p = p, (xs - alpha[k]) * p - beta[k] * p_prev
        norm_prev = norm
        # keep the recurrence in range
        scale = math.sqrt(float(np.sum(mu * p * p))) or 1.0
        p, p_prev = p / scale, p_prev / scale
        norm_prev /= scale * scale
    J = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    return np.sort(np.linalg.eigvalsh(J)) * r


def _admissible(x, r):
    return bool(x[0] > 0 and x[-1] < r and np.all(np.diff(x) > 0))


def _newton(x0, s, wfun, r, tol, max_iter):
    x = np.array(x0, dtype=float)
    F = _residuals(x, s, wfun, r)
    fnorm = float(np.max(np.abs(F)))
    n = len(x)
    it = 0
    while fnorm > tol and it < max_iter:
        it += 1
        gaps = np.diff(np.concatenate([[0.0], x, [r]]))
        J = np.empty((n, n))
        for j in range(n):
            h = 1e-7 * min(gaps[j], gaps[j + 1])
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (_residuals(xp, s, wfun, r) - _residuals(xm, s, wfun, r)) / (2 * h)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        for _ in range(50):
            cand = x + lam * step
            if _admissible(cand, r):
                Fc = _residuals(cand, s, wfun, r)
                fc = float(np.max(np.abs(Fc)))
                if fc < fnorm:
                    x, F, fnorm = cand, Fc, fc
                    break
            lam *= 0.5
        else:
            break
    return x, F, fnorm, it


def solve_extremal(n: int, s: float, w, r: float, tol: float = 1e-10,
                   max_iter: int = 200) -> ExtremalPoly:
    """Monic degree-n P on (0, r) with sign-weighted orthogonality to x..x^n.

    Damped Newton on the roots with a finite-difference Jacobian.  Starts
    from the s = 2 orthogonal polynomial and continues in s in steps of at
    most 0.25.  Residuals are relative (divided by int |P|^(s-1) x^k w).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if s < 1:
        raise ValueError("s must be >= 1")
    if not r > 0:
        raise ValueError("r must be positive")
    probe = np.linspace(r / 1000, r, 200)
    _weight_values(w, probe)
    wfun = lambda x: _weight_values(w, x)

    x = orthogonal_roots(n, w, r)
    steps = max(1, math.ceil(abs(s - 2.0) / MAX_S_STEP))
    path = np.linspace(2.0, s, steps + 1)
    total_it = 0
    for k, sk in enumerate(path):
        last = k == len(path) - 1
        x, F, fnorm, it = _newton(x, float(sk), wfun, r, tol if last else max(tol, 1e-8),
                                  max_iter)
        total_it += it
        if fnorm > (tol if last else 1e-6):
            raise NoConvergence(
                f"extremal polynomial n={n} s={sk:g} r={r:g}: residual {fnorm:.3g} after {it} "
                f"iterations", best={"roots": x.tolist(), "residuals": F.tolist()})
    return ExtremalPoly(n, float(s), float(r), x, F, _objective(x, s, wfun, r), total_it)


@dataclass
class RootBoundReport:
    ratio: float
    step_ratios: list
    ok: bool
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "stepRatios": list(self.step_ratios),
                "ok": self.ok, "messages": list(self.messages)}


def verify_root_bound(poly: ExtremalPoly, w, cfg: QuadConfig | None = None) -> RootBoundReport:
    """int_0^r w / int_0^{x_1} w, and the chain int_0^{x_{m+1}} w / int_0^{x_m} w.

    Only positivity and ordering can fail; the constant bounding the ratio
    is not explicit.
    """
    cfg = cfg or _TIGHT
    pts = list(poly.roots) + [poly.r]
    cum = []
    acc, prev = 0.0, 0.0
    for x in pts:
        res = integrate_finite(w, prev, x, cfg)
        if res.divergent:
            raise ConditionViolation("c21", f"int_0^x w diverges near x={x:g}")
        acc += res.value
        cum.append(acc)
        prev = x
    msgs = []
    ok = True
    if not _admissible(np.asarray(poly.roots), poly.r):
        ok = False
        msgs.append("roots not strictly increasing inside (0, r)")
    steps = [cum[i + 1] / cum[i] for i in range(len(cum) - 1)]
    ratio = cum[-1] / cum[0]
    if not all(v >= 1 for v in steps) or ratio < 1:
        ok = False
        msgs.append("integral ratio below 1")
    return RootBoundReport(ratio, steps, ok, msgs)


# ---------------------------------------------------------------------------
# sharp distance of the constant 1 to span{t, ..., t^n}

@dataclass
class SharpDistance:
    n: int
    p: float
    r: float
    value: float
    value_direct: float
    discrepancy: float
    lower_bound: float
    doubling_local: float
    root_ratio: float
    roots: list

    @property
    def lower_bound_holds(self) -> bool:
        return self.value >= self.lower_bound * (1 - 1e-12)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p, "r": self.r, "value": self.value,
            "valueDirect": self.value_direct, "discrepancy": self.discrepancy,
            "lowerBound": self.lower_bound, "lowerBoundHolds": self.lower_bound_holds,
            "D": self.doubling_local, "K": self.root_ratio, "roots": list(self.roots),
        }


def _direct_distance(n, pc, wfun, r):
    """min over c of (int_0^r |1 + sum c_k (t/r)^k|^p' w)^(1/p') on a fine rule."""
    X, Wq = _plain_rule(r, panels=2000, pts=6)
    mu = Wq * wfun(X)
    V = (X / r)[:, None] ** np.arange(1, n + 1)[None, :]
    scale = float(np.sum(mu))

    def fun(c):
        P = 1.0 + V @ c
        a = np.abs(P)
        val = float(np.sum(mu * a ** pc)) / scale
        grad = pc * (V.T @ (mu * a ** (pc - 1) * np.sign(P))) / scale
        return val, grad

    best = None
    for c0 in (np.zeros(n),):
        res = minimize(fun, c0, jac=True, method="BFGS",
                       options={"gtol": 1e-13, "maxiter": 5000})
        if best is None or res.fun < best.fun:
            best = res
    return (best.fun * scale) ** (1 / pc)


def sharp_distance(n: int, p: float, u, r: float, tol: float = 1e-10) -> SharpDistance:
    """min_c (int_0^r |1 + c_1 t + ... + c_n t^n|^p' u^-p' dt)^(1/p'), two ways.

    (a) roots of the extremal polynomial with s = p', w = u^-p', rescaled
    to the normalisation Q(0) = 1; (b) direct quasi-Newton minimisation
    over the coefficients.  Also evaluates the lower bound
    2^-n (D K)^(-1/p') (int_0^r u^-p')^(1/p') with D = int_0^{x_1} w /
    int_0^{x_1/2} w and K = int_0^r w / int_0^{x_1} w.
    """
    if not p > 1:
        raise ValueError("need p > 1")
    pc = p / (p - 1)
    ufn = as_function(u)

    def wfun(x):
        vals = np.abs(np.asarray(ufn(x), dtype=float)) ** (-pc)
        return np.broadcast_to(vals, np.shape(x))

    head = integrate_finite(wfun, 0.0, r, _TIGHT)
    if head.divergent:
        raise ConditionViolation("c21", f"int_0^r u^-p' diverges for r={r:g}")
    total = head.value
    if n == 0:
        v = total ** (1 / pc)
        return SharpDistance(0, p, r, v, v, 0.0, v, 1.0, 1.0, [])

    poly = solve_extremal(n, pc, wfun, r, tol)
    x = poly.roots
    # Q(t) = prod(1 - t/x_i) = (-1)^n P(t) / prod(x_i)
    scale = float(np.prod(x)) ** pc
    val_a = (_objective(x, pc, wfun, r, extra_x=False) / scale) ** (1 / pc)
    val_b = _direct_distance(n, pc, wfun, r)
    disc = abs(val_a - val_b) / val_a

    h1 = integrate_finite(wfun, 0.0, float(x[0]), _TIGHT).value
    h_half = integrate_finite(wfun, 0.0, float(x[0]) / 2, _TIGHT).value
    D = h1 / h_half
    K = total / h1
    lower = 2.0 ** (-n) * (D * K) ** (-1 / pc) * total ** (1 / pc)
    return SharpDistance(n, p, r, val_a, val_b, disc, lower, D, K, [float(t) for t in x])


# ---------------------------------------------------------------------------
# sign and flat functions

@dataclass
class SignPattern:
    """Step function equal to ``start_sign`` on [a, t_1), alternating at each t_j."""

    a: float
    b: float
    breakpoints: np.ndarray
    start_sign: int = 1
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right")
        return self.start_sign * np.where(k % 2 == 0, 1.0, -1.0)

    def pieces(self):
        """(lo, hi, sign) for each constant-sign piece."""
        edges = [self.a, *self.breakpoints, self.b]
        return [(edges[i], edges[i + 1], self.start_sign * (-1) ** i)
                for i in range(len(edges) - 1)]

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "breakpoints": [float(t) for t in self.breakpoints],
                "startSign": self.start_sign,
                "residuals": [float(v) for v in self.residuals]}


def _moments_upto(wfun, a, t, l):
    """int_a^t x^k w, k = 0..l-1."""
    out = np.empty(l)
    for k in range(l):
        res = integrate_finite(lambda x, k=k: x ** k * wfun(x), a, t, _TIGHT)
        if not res.ok and not res.status.value == "MaxSubdivisions":
            raise ConditionViolation("c21", f"weight not integrable on [{a:g}, {t:g}]")
        out[k] = res.value
    return out


def _sign_residuals(t, wfun, a, b, l, full):
    r = (-1) ** l * full.copy()
    for i, ti in enumerate(t):
        r += 2 * (-1) ** i * _moments_upto(wfun, a, ti, l)
    return r


def _sign_newton(t0, wfun, a, b, l, full, tol, max_iter=100):
    t = np.array(t0, dtype=float)
    scale = np.abs(full)
    F = _sign_residuals(t, wfun, a, b, l, full) / scale
    fnorm = float(np.max(np.abs(F)))
    k = np.arange(l)[:, None]
    for _ in range(max_iter):
        if fnorm <= tol:
            break
        sgn = 2.0 * (-1.0) ** np.arange(l)[None, :]
        J = sgn * t[None, :] ** k * wfun(t)[None, :] / scale[:, None]
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return t, F, math.inf
        lam = 1.0
        for _ in range(50):
            cand = t + lam * step
            if cand[0] > a and cand[-1] < b and np.all(np.diff(cand) > 0):
                Fc = _sign_residuals(cand, wfun, a, b, l, full) / scale
                fc = float(np.max(np.abs(Fc)))
                if fc < fnorm:
                    t, F, fnorm = cand, Fc, fc
                    break
            lam *= 0.5
        else:
            break
    return t, F, fnorm


def construct_sign_function(w, a: float, b: float, l: int, tol: float = 1e-12,
                            seed: int = 0) -> SignPattern:
    """Breakpoints a < t_1 < ... < t_l < b with int_a^b x^k w sigma = 0, k < l.

    Newton with the exact Jacobian 2 (-1)^(j-1) t_j^k w(t_j).  Initial guess:
    Chebyshev points (exact for w = 1).  Fallbacks: continuation from the
    l - 1 solution, then 10 seeded random restarts.  Residuals are relative to
    int_a^b x^k w.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if not b > a:
        raise ValueError("need a < b")
    wfun = lambda x: _weight_values(w, np.atleast_1d(np.asarray(x, float)))
    wfun(np.linspace(a + (b - a) * 1e-6, b, 64))
    full = _moments_upto(wfun, a, b, l)

    j = np.arange(1, l + 1)
    guesses = [a + (b - a) * (1 - np.cos(j * np.pi / (l + 1))) / 2]
    best = None
    for g in guesses:
        t, F, fn = _sign_newton(g, wfun, a, b, l, full, tol)
        best = (t, F, fn) if best is None or fn < best[2] else best
    if best[2] > tol and l > 1:
        prev = construct_sign_function(w, a, b, l - 1, tol, seed).breakpoints
        g = np.append(prev, 0.5 * (prev[-1] + b))
        t, F, fn = _sign_newton(g, wfun, a, b, l, full, tol)
        best = (t, F, fn) if fn < best[2] else best
    rng = np.random.default_rng(seed)
    restarts = 0
    while best[2] > tol and restarts < 10:
        restarts += 1
        g = np.sort(rng.uniform(a, b, l))
        t, F, fn = _sign_newton(g, wfun, a, b, l, full, tol)
        best = (t, F, fn) if fn < best[2] else best
    if best[2] > tol:
        raise NoConvergence(f"sign function l={l}: residual {best[2]:.3g}",
                            best={"breakpoints": best[0].tolist()})
    return SignPattern(float(a), float(b), best[0], 1, best[1])


@dataclass
class FlatFunction:
    """g(x) = 1/(l-1)! int_a^x (x - t)^(l-1) w(t) sigma(t) dt on [a, b], 0 outside.

    Its l-th derivative is w sigma, so |g^(l)| = w on (a, b), and the vanishing
    moments of w sigma make g^(j)(b) = 0 for j < l.
    """

    w: object
    sigma: SignPattern
    l: int

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, j: int = 0):
        if not 0 <= j <= self.l:
            raise ValueError(f"derivative order must be in 0..{self.l}")
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self._single(float(v), j) for v in xs])
        return float(out[0]) if scalar else out

    def _single(self, x: float, j: int) -> float:
        a, b = self.sigma.a, self.sigma.b
        if x < a or x > b:
            return 0.0
        wfun = as_function(self.w)
        if j == self.l:
            return float(np.asarray(wfun(np.array([x])))[0] * self.sigma(x))
        m = self.l - 1 - j
        fact = math.factorial(m)
        acc = 0.0
        for lo, hi, sg in self.sigma.pieces():
            if lo >= x:
                break
            hi = min(hi, x)
            res = integrate_finite(lambda t: (x - t) ** m * wfun(t), lo, hi, _TIGHT)
            acc += sg * res.value
        return acc / fact


def construct_flat_function(w, a: float, b: float, l: int, tol: float = 1e-12,
                            seed: int = 0) -> FlatFunction:
    sigma = construct_sign_function(w, a, b, l, tol, seed)
    return FlatFunction(w, sigma, l)
