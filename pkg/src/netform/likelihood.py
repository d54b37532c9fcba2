"""One-way-link log-likelihood, its analytic score and Hessian.

Every unordered dyad {i, j} contributes

    l_ij = y_ij ln P_ij + y_ji ln P_ji + (1 - y_ij - y_ji) ln(1 - P_ij - P_ji)

with P_ij = Phi(pi_ij) - H(pi_ij, pi_ji + alpha; rho). Derivatives are taken
first in the dyad-local coordinates (pi_ij, pi_ji, alpha, rho) and then pushed
through a sparse Jacobian onto whichever parameter layout is in use (one
effect per agent, or one effect per group).

Scores and Hessians are those of the normalised objective (2/N) * sum l_ij,
N = n(n-1). Parameter vectors are ordered (beta, alpha, rho, sender block,
receiver block).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr

from .bvn import bvn_cdf, bvn_second, norm_pdf
from .model import CommonParams, Dataset, HeterogeneityVector

PROB_FLOOR = 1e-12


class DegenerateProbabilityError(FloatingPointError):
    def __init__(self, dyad, value):
        self.dyad = dyad
        self.value = value
        super().__init__(
            f"outcome probability {value:.3g} below {PROB_FLOOR:g} at dyad {dyad} (1-based agents)"
        )


@dataclass(frozen=True)
class DyadArrays:
    """Unordered dyads i < j in lexicographic order, with their data."""

    n: int
    i: np.ndarray
    j: np.ndarray
    y_ij: np.ndarray
    y_ji: np.ndarray
    z_ij: np.ndarray
    z_ji: np.ndarray

    @classmethod
    def from_dataset(cls, data: Dataset) -> "DyadArrays":
        n = data.n
        i, j = np.triu_indices(n, k=1)
        y = data.network.oneway().astype(float)
        z = data.covariates.z
        return cls(n=n, i=i, j=j, y_ij=y[i, j], y_ji=y[j, i], z_ij=z[i, j], z_ji=z[j, i])

    @property
    def n_dyads(self) -> int:
        return self.i.size

    @property
    def N(self) -> int:
        return self.n * (self.n - 1)


class Layout:
    """Where each agent's sender/receiver effect lives in the parameter vector.

    ``a_col[i]`` is the column of A_i (or -1 when A_i is pinned at zero),
    ``b_col[i]`` the column of B_i.
    """

    def __init__(self, n: int, d_z: int, a_col, b_col, n_a: int, n_b: int, kind: str):
        self.n = n
        self.d_z = d_z
        self.a_col = np.asarray(a_col, dtype=int)
        self.b_col = np.asarray(b_col, dtype=int)
        self.n_a = n_a
        self.n_b = n_b
        self.kind = kind

    @property
    def alpha_index(self) -> int:
        return self.d_z

    @property
    def rho_index(self) -> int:
        return self.d_z + 1

    @property
    def gamma_start(self) -> int:
        return self.d_z + 2

    @property
    def size(self) -> int:
        return self.d_z + 2 + self.n_a + self.n_b

    @classmethod
    def fixed_effects(cls, n: int, d_z: int) -> "Layout":
        """A_2..A_n, B_1..B_n free; A_1 = 0."""
        s = d_z + 2
        a_col = np.concatenate([[-1], s + np.arange(n - 1)])
        b_col = s + (n - 1) + np.arange(n)
        return cls(n, d_z, a_col, b_col, n - 1, n, "fixed_effects")

    @classmethod
    def grouped(cls, membership_a, membership_b, d_z: int) -> "Layout":
        """a_2..a_KA, b_1..b_KB free; a_1 = 0. Memberships are 1-based labels."""
        ma = np.asarray(membership_a, dtype=int)
        mb = np.asarray(membership_b, dtype=int)
        k_a, k_b = int(ma.max()), int(mb.max())
        s = d_z + 2
        a_col = np.where(ma >= 2, s + ma - 2, -1)
        b_col = s + (k_a - 1) + mb - 1
        layout = cls(ma.size, d_z, a_col, b_col, k_a - 1, k_b, "grouped")
        layout.membership_a = ma
        layout.membership_b = mb
        layout.k_a = k_a
        layout.k_b = k_b
        return layout

    def names(self) -> list[str]:
        out = [f"beta_{k + 1}" for k in range(self.d_z)] + ["alpha", "rho"]
        if self.kind == "grouped":
            out += [f"a_{k}" for k in range(2, self.n_a + 2)]
            out += [f"b_{k}" for k in range(1, self.n_b + 1)]
        else:
            out += [f"A_{k}" for k in range(2, self.n + 1)]
            out += [f"B_{k}" for k in range(1, self.n + 1)]
        return out

    def effects(self, vec) -> tuple[np.ndarray, np.ndarray]:
        vec = np.asarray(vec, dtype=float)
        padded = np.append(vec, 0.0)  # column -1 reads the pinned zero
        return padded[self.a_col], padded[self.b_col]

    def split(self, vec) -> tuple[CommonParams, HeterogeneityVector]:
        vec = np.asarray(vec, dtype=float)
        theta = CommonParams(vec[: self.d_z], vec[self.alpha_index], vec[self.rho_index])
        a, b = self.effects(vec)
        return theta, HeterogeneityVector.normalized(a, b)

    def pack(self, theta: CommonParams, a_free, b_free) -> np.ndarray:
        return np.concatenate([theta.beta, [theta.alpha, theta.rho], a_free, b_free])

    def pack_gamma(self, theta: CommonParams, gamma: HeterogeneityVector) -> np.ndarray:
        if self.kind != "fixed_effects":
            raise ValueError("pack_gamma needs the fixed-effects layout")
        return self.pack(theta, gamma.a[1:], gamma.b)


@dataclass(frozen=True)
class Evaluation:
    loglik_sum: float
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    n_agents: int = 0
    min_prob: float = 1.0
    min_prob_dyad: tuple = ()

    @property
    def N(self) -> int:
        return self.n_agents * (self.n_agents - 1)

    @property
    def loglik_normalized(self) -> float:
        return 2.0 * self.loglik_sum / self.N


def _local_derivatives(x, y, alpha, rho, order):
    """P_ij, P_ji and their derivatives in (x=pi_ij, y=pi_ji, alpha, rho)."""
    m = x.size
    u = np.concatenate([x, y])
    v = np.concatenate([y, x]) + alpha
    # P(X <= u, Y > v) evaluated directly; Phi(u) - H(u, v) cancels badly in the tails
    f = bvn_cdf(u, -v, -rho)
    if order == 0:
        return f[:m], f[m:], None, None
    hs = bvn_second(u, v, rho, with_cdf=False)
    phi_u = norm_pdf(u)
    fu = phi_u * ndtr((rho * u - v) / np.sqrt(1.0 - rho * rho))
    fv = -hs.h2
    fr = -hs.hr
    # gradient in (x, y, alpha, rho); second probability swaps the roles of x and y
    g1 = np.stack([fu[:m], fv[:m], fv[:m], fr[:m]], axis=1)
    g2 = np.stack([fv[m:], fu[m:], fv[m:], fr[m:]], axis=1)
    if order == 1:
        return f[:m], f[m:], (g1, g2), None
    fuu = -u * fu + rho * hs.hr
    fuv = -hs.h12
    fvv = -hs.h22
    fur = -hs.h1r
    fvr = -hs.h2r
    frr = -hs.hrr

    def assemble(sl, swap):
        uu, uv, vv, ur, vr, rr = (t[sl] for t in (fuu, fuv, fvv, fur, fvr, frr))
        h = np.empty((m, 4, 4))
        if not swap:
            # coordinates: u = x, v = y + alpha
            h[:, 0, 0] = uu
            h[:, 0, 1] = h[:, 0, 2] = uv
            h[:, 0, 3] = ur
            h[:, 1, 1] = h[:, 1, 2] = h[:, 2, 2] = vv
            h[:, 1, 3] = h[:, 2, 3] = vr
        else:
            # coordinates: u = y, v = x + alpha
            h[:, 1, 1] = uu
            h[:, 0, 1] = h[:, 1, 2] = uv
            h[:, 1, 3] = ur
            h[:, 0, 0] = h[:, 0, 2] = h[:, 2, 2] = vv
            h[:, 0, 3] = h[:, 2, 3] = vr
        h[:, 3, 3] = rr
        iu = np.triu_indices(4, 1)
        h[:, iu[1], iu[0]] = h[:, iu[0], iu[1]]
        return h

    H1 = assemble(slice(0, m), False)
    H2 = assemble(slice(m, 2 * m), True)
    return f[:m], f[m:], (g1, g2), (H1, H2)


class LikelihoodEvaluator:
    """Log-likelihood, score and Hessian on a fixed dataset and layout."""

    def __init__(self, data: Dataset | DyadArrays, layout: Layout, clip: bool = True):
        self.dyads = data if isinstance(data, DyadArrays) else DyadArrays.from_dataset(data)
        if layout.n != self.dyads.n:
            raise ValueError("layout and data disagree on n")
        self.layout = layout
        self.clip = clip
        self._jac = self._build_jacobian()

    def _build_jacobian(self) -> sp.csr_matrix:
        d = self.dyads
        L = self.layout
        D, dz = d.n_dyads, L.d_z
        rows, cols, vals = [], [], []
        base = 4 * np.arange(D)
        beta_cols = np.arange(dz)
        for offset, z, own, other in ((0, d.z_ij, d.i, d.j), (1, d.z_ji, d.j, d.i)):
            r = base + offset
            rows.append(np.repeat(r, dz))
            cols.append(np.tile(beta_cols, D))
            vals.append(z.ravel())
            for col in (L.a_col[own], L.b_col[other]):
                keep = col >= 0
                rows.append(r[keep])
                cols.append(col[keep])
                vals.append(np.ones(keep.sum()))
        rows += [base + 2, base + 3]
        cols += [np.full(D, L.alpha_index), np.full(D, L.rho_index)]
        vals += [np.ones(D), np.ones(D)]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(4 * D, L.size),
        )

    def indices(self, vec) -> tuple[np.ndarray, np.ndarray]:
        d = self.dyads
        L = self.layout
        beta = vec[: L.d_z]
        a, b = L.effects(vec)
        x = d.z_ij @ beta + a[d.i] + b[d.j]
        y = d.z_ji @ beta + a[d.j] + b[d.i]
        return x, y

    def evaluate(self, vec, order: int = 2) -> Evaluation:
        vec = np.asarray(vec, dtype=float)
        L = self.layout
        d = self.dyads
        alpha, rho = vec[L.alpha_index], vec[L.rho_index]
        if not (alpha > 0 and abs(rho) < 1):
            return Evaluation(-np.inf, n_agents=d.n)
        x, y = self.indices(vec)
        p1, p2, grads, hessians = _local_derivatives(x, y, alpha, rho, order)
        p0 = 1.0 - p1 - p2

        y1, y2 = d.y_ij, d.y_ji
        y0 = 1.0 - y1 - y2
        # probability of the outcome actually observed in each dyad
        observed = np.where(y1 > 0, p1, np.where(y2 > 0, p2, p0))
        k = int(np.argmin(observed))
        low = float(observed[k])
        if self.clip:
            p1, p2, p0 = (np.maximum(p, PROB_FLOOR) for p in (p1, p2, p0))
        with np.errstate(divide="ignore"):
            # exactly one outcome indicator is 1 per dyad
            terms = np.where(y1 > 0, np.log(p1), np.where(y2 > 0, np.log(p2), np.log(p0)))
        loglik = float(np.sum(terms))
        info = dict(n_agents=d.n, min_prob=low, min_prob_dyad=(int(d.i[k]) + 1, int(d.j[k]) + 1))
        if order == 0:
            return Evaluation(loglik, **info)

        scale = 2.0 / d.N
        g1, g2 = grads
        w1, w2, w0 = y1 / p1, y2 / p2, y0 / p0
        g0 = g1 + g2
        local_grad = w1[:, None] * g1 + w2[:, None] * g2 - w0[:, None] * g0
        J = self._jac
        grad = scale * (J.T @ local_grad.ravel())
        if order == 1:
            return Evaluation(loglik, grad, **info)

        H1, H2 = hessians
        local_hess = (
            w1[:, None, None] * H1
            + w2[:, None, None] * H2
            - w0[:, None, None] * (H1 + H2)
            - (w1 / p1)[:, None, None] * g1[:, :, None] * g1[:, None, :]
            - (w2 / p2)[:, None, None] * g2[:, :, None] * g2[:, None, :]
            - (w0 / p0)[:, None, None] * g0[:, :, None] * g0[:, None, :]
        )
        D = d.n_dyads
        block = sp.bsr_matrix((local_hess, np.arange(D), np.arange(D + 1)), shape=(4 * D, 4 * D))
        hess = scale * (J.T @ (block @ J)).toarray()
        hess = 0.5 * (hess + hess.T)
        return Evaluation(loglik, grad, hess, **info)


@dataclass(frozen=True)
class LogLik:
    loglik_sum: float
    loglik_normalized: float


@dataclass(frozen=True)
class GradientVector:
    """Score of the normalised log-likelihood.

    d_theta is ordered (beta, alpha, rho); d_gamma is (A_2..A_n, B_1..B_n)
    for the fixed-effects layout, or (a_2..a_KA, b_1..b_KB) for the grouped one.
    """

    d_theta: np.ndarray
    d_gamma: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.d_theta, self.d_gamma])


def _fe_point(data: Dataset, theta: CommonParams, gamma: HeterogeneityVector):
    layout = Layout.fixed_effects(data.n, data.d_z)
    return LikelihoodEvaluator(data, layout), layout.pack_gamma(theta, gamma)


def log_likelihood(data: Dataset, theta: CommonParams, gamma: HeterogeneityVector, strict: bool = True) -> LogLik:
    """Sum over unordered dyads of l_ij, and the normalised value (2/N) * sum.

    With ``strict`` a probability below the floor raises
    DegenerateProbabilityError naming the dyad; otherwise it is clipped.
    """
    ev, vec = _fe_point(data, theta, gamma)
    out = ev.evaluate(vec, order=0)
    if strict and out.min_prob < PROB_FLOOR:
        raise DegenerateProbabilityError(out.min_prob_dyad, out.min_prob)
    return LogLik(out.loglik_sum, out.loglik_normalized)


def score(data: Dataset, theta: CommonParams, gamma: HeterogeneityVector) -> GradientVector:
    ev, vec = _fe_point(data, theta, gamma)
    g = ev.evaluate(vec, order=1).grad
    k = data.d_z + 2
    return GradientVector(g[:k], g[k:])


def hessian(data: Dataset, theta: CommonParams, gamma: HeterogeneityVector) -> np.ndarray:
    """Dense Hessian over (beta, alpha, rho, A_2..A_n, B_1..B_n)."""
    ev, vec = _fe_point(data, theta, gamma)
    return ev.evaluate(vec, order=2).hess


def grouped_score(data: Dataset, theta: CommonParams, a_values, b_values, membership_a, membership_b) -> GradientVector:
    """Score in the grouped parameterisation (a_1 = 0 is dropped)."""
    layout = Layout.grouped(membership_a, membership_b, data.d_z)
    vec = layout.pack(theta, np.asarray(a_values, dtype=float)[1:], b_values)
    g = LikelihoodEvaluator(data, layout).evaluate(vec, order=1).grad
    k = data.d_z + 2
    return GradientVector(g[:k], g[k:])


def grouped_hessian(data: Dataset, theta: CommonParams, a_values, b_values, membership_a, membership_b) -> np.ndarray:
    layout = Layout.grouped(membership_a, membership_b, data.d_z)
    vec = layout.pack(theta, np.asarray(a_values, dtype=float)[1:], b_values)
    return LikelihoodEvaluator(data, layout).evaluate(vec, order=2).hess


@dataclass(frozen=True)
class ProfilePoint:
    rho: float
    profiled_loglik: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class RhoProfile:
    points: list

    @property
    def values(self) -> np.ndarray:
        return np.array([p.profiled_loglik for p in self.points])

    @property
    def grid(self) -> np.ndarray:
        return np.array([p.rho for p in self.points])

    @property
    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.values))])

    @property
    def unimodal(self) -> bool:
        """Values rise to a single peak and then fall (ties count as neither)."""
        v = self.values
        if v.size < 3:
            return True
        k = int(np.argmax(v))
        return bool(np.all(np.diff(v[: k + 1]) > 0) and np.all(np.diff(v[k:]) < 0))


def profile_rho(data: Dataset, rho_grid: Sequence[float], options=None, start=None) -> RhoProfile:
    """Concentrated log-likelihood: for each rho, maximise over (beta, alpha, gamma).

    Points are fitted outward from the grid value nearest ``start`` (or the
    middle of the grid), each warm-started from its neighbour. A failed fit is
    reported on its point rather than raised.
    """
    from .step1 import FitOptions, fit_fixed_effects

    grid = np.asarray(rho_grid, dtype=float)
    if grid.size < 3:
        raise ValueError("rho grid needs at least 3 points")
    if np.any(np.abs(grid) >= 1):
        raise ValueError("rho grid must lie strictly inside (-1, 1)")
    options = options or FitOptions()
    layout = Layout.fixed_effects(data.n, data.d_z)
    ev = LikelihoodEvaluator(data, layout)

    if start is None:
        start = fit_fixed_effects(data, options, evaluator=ev)
    k0 = int(np.argmin(np.abs(grid - start.theta_hat.rho)))
    order = [k0] + list(range(k0 + 1, grid.size)) + list(range(k0 - 1, -1, -1))
    base = layout.pack_gamma(start.theta_hat, start.gamma_hat)

    results = {}
    warm = {}
    for k in order:
        init = base.copy()
        nb = k - 1 if k > k0 else k + 1
        if k != k0 and nb in warm:
            init = warm[nb].copy()
        init[layout.rho_index] = grid[k]
        try:
            fit = fit_fixed_effects(data, options, evaluator=ev, init_vector=init, fix_rho=True)
        except (FloatingPointError, np.linalg.LinAlgError):
            results[k] = ProfilePoint(float(grid[k]), float("nan"), False, 0)
            continue
        warm[k] = layout.pack_gamma(fit.theta_hat, fit.gamma_hat)
        results[k] = ProfilePoint(float(grid[k]), fit.loglik_sum, fit.converged, fit.iterations)
    return RhoProfile([results[k] for k in range(grid.size)])
