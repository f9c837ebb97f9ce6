"""Reference computations that avoid the package's own quadrature."""
import math
import warnings

import numpy as np
from scipy import integrate

WEIGHTS = {
    "1": lambda x: np.ones_like(np.asarray(x, float)),
    "x": lambda x: np.asarray(x, float),
    "exp(-x)": lambda x: np.exp(-np.asarray(x, float)),
}


def quad(f, a, b, points=None):
    # scipy warns when 1e-13 is out of reach; the answer is still its best estimate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, points=points, limit=500, epsabs=0, epsrel=1e-13)
    return val


def moment_roots(n, w, r):
    """Roots of the monic degree-n polynomial orthogonal w.r.t. x w(x) on (0, r).

    Moments of the rescaled variable t = x / r, a Hankel solve, then numpy roots.
    """
    m = np.array([quad(lambda t, j=j: t ** (j + 1) * float(w(r * t)), 0.0, 1.0)
                  for j in range(2 * n)])
    H = np.array([[m[i + j] for j in range(n)] for i in range(n)])
    c = np.linalg.solve(H, -m[n:2 * n])
    roots = np.roots(np.concatenate([[1.0], c[::-1]]))
    assert np.allclose(roots.imag, 0)
    return np.sort(roots.real) * r


def monic_objective(low, n, s, w, r):
    """int_0^r |x^n + sum_j low[j] x^j|^s x w(x) dx."""
    coeffs = np.concatenate([[1.0], np.asarray(low, float)[::-1]])
    roots = np.roots(coeffs)
    pts = sorted(float(z.real) for z in roots if abs(z.imag) < 1e-12 and 0 < z.real < r)
    f = lambda x: abs(np.polyval(coeffs, x)) ** s * x * float(w(x))
    return quad(f, 0.0, r, points=pts or None)


def signed_moments(w, pieces, l):
    """int x^k w sigma over the (lo, hi, sign) pieces, k < l, and int x^k w."""
    signed = np.zeros(l)
    total = np.zeros(l)
    for lo, hi, sg in pieces:
        for k in range(l):
            val = quad(lambda x, k=k: x ** k * float(w(x)), lo, hi)
            signed[k] += sg * val
            total[k] += val
    return signed, total


def taylor_flat(w, pieces, l, x, j):
    """g^(j)(x) = 1/(l-1-j)! int_a^x (x - t)^(l-1-j) w sigma, straight from scipy."""
    m = l - 1 - j
    acc = 0.0
    for lo, hi, sg in pieces:
        if lo >= x:
            break
        acc += sg * quad(lambda t: (x - t) ** m * float(w(t)), lo, min(hi, x))
    return acc / math.factorial(m)


def orthogonality_residuals(roots, s, w, r):
    """int |P|^(s-1) sgn(P) (x/r)^k w / int |P|^(s-1) (x/r)^k w for k = 1..n."""
    roots = np.asarray(roots, float)
    P = lambda x: float(np.prod(x - roots))
    out = []
    for k in range(1, len(roots) + 1):
        num = quad(lambda x: abs(P(x)) ** (s - 1) * np.sign(P(x)) * (x / r) ** k * float(w(x)),
                   0.0, r, points=list(roots))
        den = quad(lambda x: abs(P(x)) ** (s - 1) * (x / r) ** k * float(w(x)),
                   0.0, r, points=list(roots))
        out.append(num / den)
    return np.array(out)
