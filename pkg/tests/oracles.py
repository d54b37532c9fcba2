"""Independent reference computations used by the tests."""

import numpy as np
from scipy import integrate, stats


def bvn_cdf_quad(a1, a2, rho):
    """P(X <= a1, Y <= a2) by adaptive quadrature of phi(x) * Phi((a2 - rho x) / s).

    The inner integral over y is the exact conditional normal CDF, so only
    one dimension is integrated numerically. The integrand's steep region
    sits near x = a2 / rho; that point is passed to the integrator.
    """
    s = np.sqrt(1.0 - rho * rho)
    lo = -14.0
    if a1 <= lo:
        return 0.0
    f = lambda x: stats.norm.pdf(x) * stats.norm.cdf((a2 - rho * x) / s)
    pts = [a2 / rho] if rho != 0 and lo < a2 / rho < a1 else None
    val, _ = integrate.quad(f, lo, a1, points=pts, epsabs=1e-15, epsrel=1e-13, limit=400)
    return val


def bvn_cdf_dblquad(a1, a2, rho):
    """Plain 2-D adaptive quadrature of the bivariate density (slow)."""
    s2 = 1.0 - rho * rho
    dens = lambda y, x: np.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * s2)) / (2 * np.pi * np.sqrt(s2))
    val, _ = integrate.dblquad(dens, -14.0, a1, -14.0, a2, epsabs=1e-14, epsrel=1e-12)
    return val


def best_responses(pi_ij, pi_ji, alpha, eps_ij, eps_ji):
    """Pure Nash equilibria of the dyad game by enumerating the four profiles."""
    eq = []
    for gi in (0, 1):
        for gj in (0, 1):
            ui = lambda a, b: a * (pi_ij + alpha * b - eps_ij)
            uj = lambda b, a: b * (pi_ji + alpha * a - eps_ji)
            if ui(gi, gj) >= ui(1 - gi, gj) and uj(gj, gi) >= uj(1 - gj, gi):
                eq.append((gi, gj))
    return eq


def exhaustive_segmentation(values, K):
    """Break points (1-based, into the sorted values) minimising total within variation."""
    from itertools import combinations

    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    best, best_breaks = np.inf, None
    for breaks in combinations(range(1, n), K - 1):
        edges = [0, *breaks, n]
        tot = sum(np.sum((v[a:b] - v[a:b].mean()) ** 2) for a, b in zip(edges[:-1], edges[1:]))
        if tot < best - 1e-15:
            best, best_breaks = tot, breaks
    return best_breaks, best
