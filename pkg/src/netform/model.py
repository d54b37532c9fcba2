"""Networks, covariates, parameters and the per-dyad link game."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bvn import bvn_cdf


class DatasetError(ValueError):
    """Invalid network or covariate data."""


@dataclass(frozen=True)
class DirectedNetwork:
    adjacency: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.adjacency)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DatasetError(f"adjacency must be square, got shape {g.shape}")
        if g.shape[0] < 2:
            raise DatasetError("need at least two agents")
        if not np.isin(g, (0, 1)).all():
            bad = np.argwhere(~np.isin(g, (0, 1)))[0]
            raise DatasetError(f"non-binary adjacency entry at row {bad[0] + 1}, column {bad[1] + 1}")
        diag = np.flatnonzero(np.diag(g))
        if diag.size:
            raise DatasetError(f"self-loop on the diagonal at row {diag[0] + 1}")
        object.__setattr__(self, "adjacency", g.astype(np.int8))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def oneway(self) -> np.ndarray:
        """y[i, j] = 1 iff (g_ij, g_ji) = (1, 0)."""
        g = self.adjacency
        return (g * (1 - g.T)).astype(np.int8)


@dataclass(frozen=True)
class DyadCovariates:
    """Z[i, j] is the covariate vector of the ordered pair (i, j); the diagonal is unused."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 2:
            z = z[:, :, None]
        if z.ndim != 3 or z.shape[0] != z.shape[1]:
            raise DatasetError(f"covariates must have shape (n, n, d_z), got {z.shape}")
        off = ~np.eye(z.shape[0], dtype=bool)
        if not np.isfinite(z[off]).all():
            raise DatasetError("covariates contain non-finite values")
        z = z.copy()
        z[~off] = 0.0
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def d_z(self) -> int:
        return self.z.shape[2]


@dataclass(frozen=True)
class CommonParams:
    beta: np.ndarray
    alpha: float
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not abs(self.rho) < 1:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beta, [self.alpha, self.rho]])


@dataclass(frozen=True)
class HeterogeneityVector:
    """Sender effects a and receiver effects b, with a[0] pinned at zero."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("sender and receiver effects must be 1-d of equal length")
        if a[0] != 0.0:
            raise ValueError("location normalisation requires a[0] == 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def normalized(cls, a, b) -> "HeterogeneityVector":
        """Shift (a + c, b - c) so that the first sender effect is zero."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        c = a[0]
        return cls(a - c, b + c)


@dataclass(frozen=True)
class GroupModel:
    """Group memberships (1-based labels) with one sender and one receiver value per group."""

    membership_a: np.ndarray
    membership_b: np.ndarray
    a_values: np.ndarray
    b_values: np.ndarray

    def __post_init__(self):
        ma = np.asarray(self.membership_a, dtype=int)
        mb = np.asarray(self.membership_b, dtype=int)
        av = np.asarray(self.a_values, dtype=float)
        bv = np.asarray(self.b_values, dtype=float)
        if ma.shape != mb.shape or ma.ndim != 1:
            raise ValueError("memberships must be 1-d of equal length")
        for m, vals, side in ((ma, av, "sender"), (mb, bv, "receiver")):
            if vals.size < 1 or set(np.unique(m)) != set(range(1, vals.size + 1)):
                raise ValueError(f"{side} memberships must cover labels 1..{vals.size}")
        if av[0] != 0.0:
            raise ValueError("location normalisation requires a_values[0] == 0")
        for name, arr in (("membership_a", ma), ("membership_b", mb), ("a_values", av), ("b_values", bv)):
            object.__setattr__(self, name, arr)

    @property
    def k_a(self) -> int:
        return self.a_values.size

    @property
    def k_b(self) -> int:
        return self.b_values.size

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.a_values) > 0) and np.all(np.diff(self.b_values) > 0))

    def heterogeneity(self) -> HeterogeneityVector:
        """Per-agent effects, shifted so that agent 1's sender effect is zero."""
        return HeterogeneityVector.normalized(
            self.a_values[self.membership_a - 1], self.b_values[self.membership_b - 1]
        )


@dataclass(frozen=True)
class Dataset:
    network: DirectedNetwork
    covariates: DyadCovariates
    agent_labels: Optional[Sequence[str]] = None
    covariate_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.network.n != self.covariates.n:
            raise DatasetError(
                f"network has {self.network.n} agents but covariates cover {self.covariates.n}"
            )
        if self.agent_labels is not None and len(self.agent_labels) != self.n:
            raise DatasetError("agent label count does not match n")
        if self.covariate_names is not None and len(self.covariate_names) != self.d_z:
            raise DatasetError("covariate name count does not match d_z")

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def d_z(self) -> int:
        return self.covariates.d_z


def linear_index(Z: DyadCovariates, gamma: HeterogeneityVector, beta, i: int, j: int) -> float:
    """pi_ij = Z_ij' beta + A_i + B_j, with 0-based agent indices."""
    n = Z.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"agent index out of range for n={n}: ({i}, {j})")
    if i == j:
        raise ValueError("linear index undefined for i == j")
    return float(Z.z[i, j] @ np.asarray(beta, dtype=float) + gamma.a[i] + gamma.b[j])


def linear_indices(Z: DyadCovariates, gamma: HeterogeneityVector, beta) -> np.ndarray:
    """Matrix of all pi_ij (diagonal set to nan)."""
    pi = Z.z @ np.asarray(beta, dtype=float) + gamma.a[:, None] + gamma.b[None, :]
    np.fill_diagonal(pi, np.nan)
    return pi


def oneway_prob(pi_ij, pi_ji, alpha, rho):
    """Probability of the one-way outcome (g_ij, g_ji) = (1, 0)."""
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("alpha must be positive")
    pi_ij = np.asarray(pi_ij, dtype=float)
    v = np.asarray(pi_ji, dtype=float) + alpha
    # P(eps_ij <= pi_ij, eps_ji > v) as a single orthant probability
    out = bvn_cdf(pi_ij, -v, -np.asarray(rho, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


class DyadOutcome(enum.IntEnum):
    NONE = 0
    ONEWAY_IJ = 1
    ONEWAY_JI = 2
    MUTUAL = 3
    MULTIPLE = 4


def solve_dyad(pi_ij, pi_ji, alpha, eps_ij, eps_ji):
    """Pure-strategy Nash outcome of the two-player link game.

    Agent i links when pi_ij + alpha * g_ji >= eps_ij, so ties on region
    boundaries fall to the linking side. Vectorised; returns DyadOutcome
    codes (a DyadOutcome member for scalar input).
    """
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("alpha must be positive")
    pi_ij, pi_ji, eps_ij, eps_ji = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (pi_ij, pi_ji, eps_ij, eps_ji))
    )
    i_low = eps_ij <= pi_ij
    i_high = eps_ij > pi_ij + alpha
    j_low = eps_ji <= pi_ji
    j_high = eps_ji > pi_ji + alpha
    i_mid = ~i_low & ~i_high
    j_mid = ~j_low & ~j_high

    out = np.full(pi_ij.shape, DyadOutcome.NONE, dtype=np.int8)
    out[~i_high & ~j_high] = DyadOutcome.MUTUAL
    out[i_low & j_high] = DyadOutcome.ONEWAY_IJ
    out[i_high & j_low] = DyadOutcome.ONEWAY_JI
    out[i_mid & j_mid] = DyadOutcome.MULTIPLE
    if out.ndim == 0:
        return DyadOutcome(int(out))
    return out


def outcome_links(outcome, select_mutual) -> tuple[np.ndarray, np.ndarray]:
    """Map outcomes to (g_ij, g_ji); MULTIPLE resolves to (1,1) where select_mutual is true."""
    outcome = np.asarray(outcome)
    sel = np.asarray(select_mutual, dtype=bool)
    mutual = (outcome == DyadOutcome.MUTUAL) | ((outcome == DyadOutcome.MULTIPLE) & sel)
    g_ij = (outcome == DyadOutcome.ONEWAY_IJ) | mutual
    g_ji = (outcome == DyadOutcome.ONEWAY_JI) | mutual
    return g_ij.astype(np.int8), g_ji.astype(np.int8)
