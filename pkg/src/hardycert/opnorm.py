"""Discretised Hardy-type operators and lower bounds on their norms.

(Tf)(x) = sum_k a_k(x) int_0^x t^k f(t) dt is discretised on a log grid with
cumulative trapezoid weights.  Norm estimates are always lower bounds for the
discrete problem; upper bounds come from the sup-over-r criteria.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import svds

from .criteria import Exponents, RGrid, hardy_certify
from .errors import ConditionViolation, SandwichViolation
from .quad import QuadConfig
from .report import curves_to_csv, dumps, jsonable
from .weightlang import as_function

__all__ = [
    "OperatorSpec", "DiscreteOperator", "NormEstimate", "discretize",
    "norm_lower_bound", "domain_sweep", "SandwichReport", "sandwich_check",
    "BOUNDED_VARIATION",
]

BOUNDED_VARIATION = 0.05  # relative change per domain doubling counted as "bounded"


@dataclass
class OperatorSpec:
    coeffs: list
    u: object
    v: object
    exps: Exponents

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("need at least one coefficient a_0")

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1


@dataclass
class DiscreteOperator:
    """Lower-triangular kernel on input nodes ``x`` and output nodes ``y``.

    ``y`` is ``x`` followed by extra log-spaced nodes beyond ``x[-1]``: f is
    supported on the input grid, but Tf is measured on the longer output grid.
    f vanishes on (0, x[0]); a constant extension there would misjudge weights
    whose p-th power is not integrable at 0.
    """

    x: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    M: np.ndarray
    U: np.ndarray
    V: np.ndarray
    exps: Exponents

    @property
    def N(self) -> int:
        return len(self.x)

    def apply(self, f) -> np.ndarray:
        return self.M @ np.asarray(f, dtype=float)

    def scaled(self) -> np.ndarray:
        """Matrix B with ||B g||_q / ||g||_p equal to the discrete weighted ratio."""
        p, q = self.exps.p, self.exps.q
        left = self.V if q == math.inf else self.nu ** (1 / q) * self.V
        right = 1.0 / (self.mu ** (1 / p) * self.U)
        return (left[:, None] * self.M) * right[None, :]


def _trap_weights(x):
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def discretize(spec: OperatorSpec, N: int, domain=(1e-4, 1e4),
               tail_decades: float = 3.0, tail_fraction: float = 0.25) -> DiscreteOperator:
    """Build the kernel matrix on N log-spaced nodes of ``domain``.

    ``tail_decades`` > 0 appends ``tail_fraction * N`` output rows spread
    over (x_max, x_max * 10^tail_decades].
    """
    if N < 16:
        raise ValueError("N must be >= 16")
    lo, hi = float(domain[0]), float(domain[1])
    if not 0 < lo < hi:
        raise ValueError("need 0 < x_min < x_max")
    x = np.geomspace(lo, hi, N)
    if tail_decades > 0:
        n_tail = max(1, int(round(tail_fraction * N)))
        y_tail = np.geomspace(hi, hi * 10 ** tail_decades, n_tail + 1)[1:]
    else:
        y_tail = np.empty(0)
    y = np.concatenate([x, y_tail])

    tw = _trap_weights(x)
    mu = tw
    nu = _trap_weights(y)

    U = np.broadcast_to(np.asarray(as_function(spec.u)(x), float), x.shape).copy()
    V = np.broadcast_to(np.asarray(as_function(spec.v)(y), float), y.shape).copy()

    # cumulative trapezoid: row i integrates over [x_0, min(y_i, x_max)]
    Ny = len(y)
    W = np.tril(np.ones((Ny, N))) * tw[None, :]
    idx = np.arange(1, N)
    W[idx, idx] = np.diff(x) / 2
    W[0, 0] = 0.0
    M = np.zeros((Ny, N))
    for k, ak in enumerate(spec.coeffs):
        a_vals = np.broadcast_to(np.asarray(as_function(ak)(y), float), y.shape)
        if not np.any(a_vals):
            continue
        xk = x ** k
        M += a_vals[:, None] * (W * xk[None, :])
    return DiscreteOperator(x, y, mu, nu, M, U, V, spec.exps)


@dataclass
class NormEstimate:
    lower_bound: float
    maximizer: np.ndarray
    nodes: np.ndarray
    iterations: int
    restart_values: list = field(default_factory=list)
    method: str = ""
    stable: bool | None = None
    variation: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return jsonable({
            "lowerBound": self.lower_bound, "iterations": self.iterations,
            "restarts": {"count": len(self.restart_values), "values": self.restart_values},
            "method": self.method, "truncationStable": self.stable,
            "variation": self.variation,
        })

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def maximizer_csv(self) -> str:
        return curves_to_csv({"x": self.nodes, "g": self.maximizer})


def _pnorm(g, p):
    if p == math.inf:
        return float(np.max(np.abs(g)))
    return float(np.sum(np.abs(g) ** p) ** (1 / p))


def _ratio(B, g, p, q):
    d = _pnorm(g, p)
    return _pnorm(B @ g, q) / d if d > 0 else 0.0


def _power_l2(B, tol=1e-8, max_iter=20000):
    """Largest singular value: Lanczos start, then power iteration on B^T B."""
    n = B.shape[1]
    try:
        _, _, vt = svds(B, k=1, tol=1e-12, random_state=0)
        g = vt[0]
    except Exception:
        g = np.ones(n)
    g = g / np.linalg.norm(g)
    sigma = np.linalg.norm(B @ g)
    it = 0
    for it in range(1, max_iter + 1):
        h = B.T @ (B @ g)
        nh = np.linalg.norm(h)
        if nh == 0:
            return 0.0, g, it
        g = h / nh
        new = float(np.linalg.norm(B @ g))
        if abs(new - sigma) <= tol * new:
            sigma = new
            break
        sigma = new
    return float(sigma), g, it


def _ascent(B, g0, p, q, max_iter=2000, tol=1e-12):
    """Ascent on ||B g||_q / ||g||_p.

    Each step moves to the point of the unit p-sphere that maximises the
    linearised ratio (the duality map of the gradient), then backtracks
    along the chord from the current point until the ratio increases.
    """
    pc = p / (p - 1)
    g = g0 / _pnorm(g0, p)
    val = _ratio(B, g, p, q)
    it = 0
    for it in range(1, max_iter + 1):
        Bg = B @ g
        grad = B.T @ (np.sign(Bg) * np.abs(Bg) ** (q - 1))
        cand = np.sign(grad) * np.abs(grad) ** (pc - 1)
        nc = _pnorm(cand, p)
        if nc == 0:
            break
        cand /= nc
        lam, improved = 1.0, False
        for _ in range(30):
            trial = (1 - lam) * g + lam * cand
            nt = _pnorm(trial, p)
            if nt > 0:
                trial /= nt
                tv = _ratio(B, trial, p, q)
                if tv > val:
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
        gain = tv - val
        g, val = trial, tv
        if gain <= tol * val:
            break
    return val, g, it


def _row_dual(B, p):
    """Exact ||B||_{p->inf}: the largest p'-norm of a row."""
    pc = p / (p - 1)
    rows = np.sum(np.abs(B) ** pc, axis=1) ** (1 / pc)
    i = int(np.argmax(rows))
    g = np.sign(B[i]) * np.abs(B[i]) ** (pc - 1)
    ng = _pnorm(g, p)
    return float(rows[i]), (g / ng if ng > 0 else g)


def norm_lower_bound(T: DiscreteOperator, restarts: int = 8, seed: int = 0,
                     max_iter: int = 2000) -> NormEstimate:
    """Lower bound on the discrete L_{p,u} -> L_{q,v} norm of ``T``.

    p = q = 2: largest singular value.  q = inf: exact row-wise dual norm.
    Otherwise: ascent from a positive start and ``restarts`` random starts
    whose seeds are spawned from ``seed``.
    """
    if np.any(T.U <= 0):
        raise ValueError("u must be positive at every node")
    p, q = T.exps.p, T.exps.q
    B = T.scaled()
    to_f = lambda g: g / (T.mu ** (1 / p) * T.U)
    if not np.any(B):
        return NormEstimate(0.0, np.zeros(T.N), T.x, 0, [0.0], "zero")
    if q == math.inf:
        val, g = _row_dual(B, p)
        return NormEstimate(val, to_f(g), T.x, 1, [val], "row-dual")
    if p == 2 and q == 2:
        val, g, it = _power_l2(B)
        return NormEstimate(val, to_f(g), T.x, it, [val], "power")

    starts = [np.ones(T.N)]
    for child in np.random.SeedSequence(seed).spawn(restarts):
        starts.append(np.random.default_rng(child).standard_normal(T.N))
    best, best_g, total_it, vals = -1.0, None, 0, []
    for g0 in starts:
        val, g, it = _ascent(B, g0, p, q, max_iter)
        total_it += it
        vals.append(val)
        if val > best:
            best, best_g = val, g
    return NormEstimate(best, to_f(best_g), T.x, total_it, vals, "ascent")


def domain_sweep(spec: OperatorSpec, domains, per_decade: float = 64.0,
                 restarts: int = 8, seed: int = 0, tail_decades: float = 3.0):
    """Norm lower bounds on a sequence of domains at fixed points per decade.

    Returns ``(estimates, variations)``; ``variations[j]`` is the relative
    change from domain j to j + 1.
    """
    ests = []
    for lo, hi in domains:
        N = max(16, int(round(math.log10(hi / lo) * per_decade)) + 1)
        T = discretize(spec, N, (lo, hi), tail_decades=tail_decades)
        ests.append(norm_lower_bound(T, restarts, seed))
    vals = [e.lower_bound for e in ests]
    var = [abs(vals[j + 1] - vals[j]) / max(vals[j], 1e-300) for j in range(len(vals) - 1)]
    return ests, var


def growth_class(variations, threshold: float = BOUNDED_VARIATION) -> str:
    """'bounded' if every step changes < threshold, 'growing' if every step >= it."""
    if all(v < threshold for v in variations):
        return "bounded"
    if all(v >= threshold for v in variations):
        return "growing"
    return "unclear"


@dataclass
class SandwichReport:
    n: int
    lower: float
    upper: float | None
    s_values: list
    statuses: list
    hypotheses_hold: bool
    coupling: dict
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.upper is None or self.lower <= self.upper * (1 + 1e-6)

    def to_dict(self) -> dict:
        return jsonable({
            "n": self.n, "lowerBound": self.lower, "upperBound": self.upper,
            "S": self.s_values, "statuses": self.statuses,
            "hypothesesHold": self.hypotheses_hold, "coupling": self.coupling,
            "holds": self.holds, "notes": self.notes,
            "empiricalRatio": (math.fsum(self.s_values) / self.lower
                               if self.lower > 0 and all(map(math.isfinite, self.s_values))
                               else None),
        })


def sandwich_check(spec: OperatorSpec, grid: RGrid = RGrid(), cfg: QuadConfig | None = None,
                   N: int = 2048, domain=(1e-4, 1e4), restarts: int = 8, seed: int = 0,
                   tol: float = 1e-6, doublings: int = 3) -> SandwichReport:
    """Compare the discrete norm lower bound with hardy_factor * sum_k S_k.

    If some S_k is Infinite while the hypotheses hold, the lower bound must
    grow as the domain is enlarged at both ends.  Raises
    :class:`SandwichViolation` if the lower bound exceeds the upper bound,
    or if it stays bounded where it should grow.
    """
    notes = []
    try:
        rep = hardy_certify(spec.coeffs, spec.u, spec.v, spec.exps, grid, cfg)
        hyp = True
        s_vals = [vd.value for vd in rep.verdicts.values()]
        statuses = [vd.status.value for vd in rep.verdicts.values()]
    except ConditionViolation as exc:
        hyp = False
        rep = None
        notes.append(f"hypotheses unmet ({exc.condition}); divergence coupling not asserted")
        s_vals, statuses = [], []

    T = discretize(spec, N, domain)
    est = norm_lower_bound(T, restarts, seed)
    upper = None
    if rep is not None and rep.status.value == "Finite":
        upper = spec.exps.hardy_factor * math.fsum(s_vals)
    coupling = {"asserted": False}
    if rep is not None and "Infinite" in statuses:
        lo, hi = domain
        per_decade = (N - 1) / math.log10(hi / lo)
        doms = [(lo / 2 ** j, hi * 2 ** j) for j in range(doublings + 1)]
        ests, var = domain_sweep(spec, doms, per_decade, restarts, seed)
        cls = growth_class(var)
        coupling = {"asserted": True, "values": [e.lower_bound for e in ests],
                    "variation": var, "class": cls}
        if cls == "bounded":
            raise SandwichViolation(
                "some S_k is infinite but the norm lower bound stays bounded", coupling)
    report = SandwichReport(spec.n, est.lower_bound, upper, s_vals, statuses, hyp,
                            coupling, notes)
    if upper is not None and est.lower_bound > upper * (1 + tol):
        raise SandwichViolation(
            f"lower bound {est.lower_bound:.8g} exceeds upper bound {upper:.8g}",
            report.to_dict())
    return report
