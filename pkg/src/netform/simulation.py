"""Simulated networks with grouped degree heterogeneity and a Monte Carlo harness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .grouped import fit_grouped
from .model import (
    CommonParams,
    Dataset,
    DirectedNetwork,
    DyadCovariates,
    GroupModel,
    outcome_links,
    solve_dyad,
)
from .segmentation import bs_segment, classification_ratio
from .step1 import FitOptions, Step1Fit, fit_fixed_effects

ESTIMATORS = ("Step1", "BS0", "BS2", "Oracle")
TRACKED = ("alpha", "beta_1", "beta_2", "rho")


@dataclass(frozen=True)
class DgpConfig:
    n: int = 75
    r: float = 1.0
    beta0: tuple = (-1.2, 1.6)
    alpha0: float = 0.6
    rho0: float = 0.6
    k_a: int = 3
    k_b: int = 3
    selection_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if len(self.beta0) != 2:
            raise ValueError("the design uses two covariates")
        if self.alpha0 <= 0 or not abs(self.rho0) < 1:
            raise ValueError("need alpha0 > 0 and |rho0| < 1")
        if self.r <= 0:
            raise ValueError("r must be positive so that group values are distinct")
        if not 0 <= self.selection_prob <= 1:
            raise ValueError("selection_prob must lie in [0, 1]")
        if min(self.k_a, self.k_b) < 1 or max(self.k_a, self.k_b) > self.n:
            raise ValueError("group counts must lie in [1, n]")
        if self.n < 3:
            raise ValueError("need at least 3 agents")

    @property
    def unbalanced(self) -> bool:
        return self.n % self.k_a != 0 or self.n % self.k_b != 0

    def group_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Sender values (0, r, 2r, ...) and receiver values centred at -0.4 with spacing r."""
        a = self.r * np.arange(self.k_a)
        b = -0.4 + self.r * (np.arange(1, self.k_b + 1) - (self.k_b + 1) / 2.0)
        return a, b

    def theta0(self) -> CommonParams:
        return CommonParams(np.array(self.beta0, dtype=float), self.alpha0, self.rho0)


@dataclass
class SimulatedData:
    dataset: Dataset
    theta: CommonParams
    groups: GroupModel
    outcomes: np.ndarray  # n x n, upper triangle holds DyadOutcome codes


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent counter-based stream for each (seed, replication) pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


def balanced_labels(rng, n: int, k: int) -> np.ndarray:
    """Random labels 1..k with group sizes differing by at most one."""
    return rng.permutation(np.arange(n) % k + 1)


def draw_errors(rng, size: int, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Standard bivariate normal pairs with correlation rho."""
    e = rng.standard_normal((size, 2))
    return e[:, 0], rho * e[:, 0] + np.sqrt(1.0 - rho * rho) * e[:, 1]


def generate_network(config: DgpConfig, rep: int = 0) -> SimulatedData:
    rng = rep_rng(config.seed, rep)
    n = config.n
    ma = balanced_labels(rng, n, config.k_a)
    if ma[0] != 1:
        # agent 1 belongs to sender group 1; swap with the first member of group 1
        j = int(np.flatnonzero(ma == 1)[0])
        ma[0], ma[j] = 1, ma[0]
    mb = balanced_labels(rng, n, config.k_b)
    a_vals, b_vals = config.group_values()
    groups = GroupModel(ma, mb, a_vals, b_vals)

    x = rng.uniform(-1.0, 1.0, size=n)
    z = np.empty((n, n, 2))
    z[:, :, 0] = np.abs(x[:, None] - x[None, :])
    z[:, :, 1] = rng.standard_normal((n, n))
    np.fill_diagonal(z[:, :, 0], 0.0)
    np.fill_diagonal(z[:, :, 1], 0.0)

    iu, ju = np.triu_indices(n, k=1)
    d = iu.size
    eps_ij, eps_ji = draw_errors(rng, d, config.rho0)
    # drawn even when selection_prob is 0 or 1 so every setting shares one stream
    u_select = rng.uniform(size=d)

    beta = np.asarray(config.beta0, dtype=float)
    a_agent, b_agent = a_vals[ma - 1], b_vals[mb - 1]
    pi = z @ beta + a_agent[:, None] + b_agent[None, :]
    outcome = solve_dyad(pi[iu, ju], pi[ju, iu], config.alpha0, eps_ij, eps_ji)
    g_ij, g_ji = outcome_links(outcome, u_select < config.selection_prob)

    g = np.zeros((n, n), dtype=np.int8)
    g[iu, ju] = g_ij
    g[ju, iu] = g_ji
    codes = np.full((n, n), -1, dtype=np.int8)
    codes[iu, ju] = outcome

    data = Dataset(DirectedNetwork(g), DyadCovariates(z), covariate_names=("abs_x_diff", "noise"))
    return SimulatedData(data, config.theta0(), groups, codes)


@dataclass
class RepResult:
    rep: int
    estimates: dict  # estimator -> {param: value} or None on failure
    classification: dict  # method -> (sender ratio, receiver ratio)


def _tracked(theta: CommonParams) -> dict:
    return {"alpha": theta.alpha, "beta_1": theta.beta[0], "beta_2": theta.beta[1], "rho": theta.rho}


def run_replication(config: DgpConfig, rep: int, estimators: Sequence[str], options: FitOptions) -> RepResult:
    sim = generate_network(config, rep)
    data, truth = sim.dataset, sim.groups
    est: dict = {}
    cls: dict = {}
    need_step1 = any(e in ("Step1", "BS0", "BS2") for e in estimators)
    step1 = None
    if need_step1:
        try:
            step1 = fit_fixed_effects(data, options)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError):
            step1 = None
    if "Step1" in estimators:
        est["Step1"] = _tracked(step1.theta_hat) if step1 is not None and step1.converged else None
    for name, iters in (("BS0", 0), ("BS2", 2)):
        if name not in estimators:
            continue
        if step1 is None or not step1.converged:
            est[name] = None
            continue
        seg_a = bs_segment(step1.gamma_hat.a, config.k_a, iters)
        seg_b = bs_segment(step1.gamma_hat.b, config.k_b, iters)
        cls[name] = (
            classification_ratio(seg_a.memberships, truth.membership_a),
            classification_ratio(seg_b.memberships, truth.membership_b),
        )
        est[name] = _grouped_estimate(data, seg_a.memberships, seg_b.memberships, options, step1)
    if "Oracle" in estimators:
        est["Oracle"] = _grouped_estimate(data, truth.membership_a, truth.membership_b, options, None, sim)
    return RepResult(rep, est, cls)


def _grouped_estimate(data, ma, mb, options, step1, sim=None):
    try:
        if sim is not None:
            # oracle: start from the true values
            fit = fit_grouped(data, ma, mb, options, init=_truth_as_step1(sim))
        else:
            fit = fit_grouped(data, ma, mb, options, init=step1)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return None
    return _tracked(fit.theta_hat) if fit.converged else None


def _truth_as_step1(sim: SimulatedData) -> Step1Fit:
    return Step1Fit(sim.theta, sim.groups.heterogeneity(), np.nan, True, 0, 0.0)


@dataclass
class McSummary:
    config: DgpConfig
    reps: int
    estimators: tuple
    bias: dict  # estimator -> {param: value}
    rmse: dict
    classification: dict  # method -> (sender, receiver)
    failures: dict  # estimator -> count
    elapsed: float = field(default=0.0, compare=False)

    def n_success(self, estimator: str) -> int:
        return self.reps - self.failures.get(estimator, 0)

    def failure_rate(self, estimator: str) -> float:
        return self.failures.get(estimator, 0) / self.reps


def summarize(config: DgpConfig, results: Sequence[RepResult], estimators, elapsed: float = 0.0) -> McSummary:
    truth = _tracked(config.theta0())
    bias, rmse, failures = {}, {}, {}
    for e in estimators:
        rows = [r.estimates.get(e) for r in results]
        ok = [row for row in rows if row is not None]
        failures[e] = len(rows) - len(ok)
        bias[e], rmse[e] = {}, {}
        for p in TRACKED:
            err = np.array([row[p] - truth[p] for row in ok])
            bias[e][p] = float(err.mean()) if err.size else float("nan")
            rmse[e][p] = float(np.sqrt(np.mean(err**2))) if err.size else float("nan")
    classification = {}
    for m in ("BS0", "BS2"):
        vals = [r.classification[m] for r in results if m in r.classification]
        if vals:
            arr = np.array(vals)
            classification[m] = (float(arr[:, 0].mean()), float(arr[:, 1].mean()))
    return McSummary(config, len(results), tuple(estimators), bias, rmse, classification, failures, elapsed)


def run_monte_carlo(
    config: DgpConfig,
    reps: int,
    estimators: Sequence[str] = ESTIMATORS,
    n_jobs: int = 1,
    options: Optional[FitOptions] = None,
    return_reps: bool = False,
):
    """Simulate ``reps`` datasets and fit each requested estimator.

    Replication ``k`` always uses the stream (seed, k), and results are
    aggregated in replication order, so the summary does not depend on
    ``n_jobs``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    estimators = tuple(e for e in ESTIMATORS if e in estimators)
    options = options or FitOptions()
    t0 = time.perf_counter()
    results = Parallel(n_jobs=n_jobs)(
        delayed(run_replication)(config, rep, estimators, options) for rep in range(reps)
    )
    summary = summarize(config, results, estimators, time.perf_counter() - t0)
    return (summary, results) if return_reps else summary
