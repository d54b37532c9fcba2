"""Maximum likelihood with effects tied within groups, BIC and group-count selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .likelihood import LikelihoodEvaluator, Layout
from .model import CommonParams, Dataset, GroupModel
from .segmentation import bs_segment
from .step1 import FitOptions, Step1Fit, fit_fixed_effects, maximize

SINGULAR_RATIO = 1e-10


@dataclass
class GroupedFit:
    theta_hat: CommonParams
    groups: GroupModel
    vector: np.ndarray
    names: list
    loglik_sum: float
    converged: bool
    iterations: int
    final_gradient_norm: float
    covariance: Optional[np.ndarray] = None
    standard_errors: Optional[np.ndarray] = None
    t_values: Optional[np.ndarray] = None
    singular: bool = False
    boundary: list = field(default_factory=list)

    @property
    def delta_hat(self):
        return self.theta_hat, self.groups.a_values, self.groups.b_values

    def estimates_table(self) -> list[tuple]:
        """Rows (parameter, estimate, se, t_value); se and t are nan when unavailable."""
        se = self.standard_errors if self.standard_errors is not None else np.full(self.vector.size, np.nan)
        tv = self.t_values if self.t_values is not None else np.full(self.vector.size, np.nan)
        return [(nm, float(x), float(s), float(t)) for nm, x, s, t in zip(self.names, self.vector, se, tv)]


def _relabel(labels, values):
    """Relabel groups so that their values ascend."""
    rank = np.argsort(values, kind="stable")
    new_label = np.empty_like(rank)
    new_label[rank] = np.arange(1, rank.size + 1)
    return new_label[np.asarray(labels) - 1], np.asarray(values)[rank]


def _validate_memberships(m, n, side):
    m = np.asarray(m, dtype=int)
    if m.shape != (n,):
        raise ValueError(f"{side} memberships must have length {n}")
    k = int(m.max())
    missing = sorted(set(range(1, k + 1)) - set(m.tolist()))
    if m.min() < 1 or missing:
        raise ValueError(f"{side} groups must be labelled 1..{k} with none empty (missing {missing})")
    return m


def group_start(step1: Step1Fit, membership_a, membership_b, layout: Layout):
    """Group means of the step-1 effects, shifted so group 1's sender value is zero."""
    a_vals = np.array([step1.gamma_hat.a[membership_a == k].mean() for k in range(1, layout.k_a + 1)])
    b_vals = np.array([step1.gamma_hat.b[membership_b == k].mean() for k in range(1, layout.k_b + 1)])
    c = a_vals[0]
    return layout.pack(step1.theta_hat, a_vals[1:] - c, b_vals + c)


def fit_grouped(
    data: Dataset,
    membership_a,
    membership_b,
    options: Optional[FitOptions] = None,
    init: Optional[Step1Fit] = None,
) -> GroupedFit:
    """Fit (beta, alpha, rho, a_2..a_KA, b_1..b_KB) for fixed memberships.

    Groups are relabelled afterwards so that values ascend, and the
    covariance (2/N) (-H)^-1 is computed at the relabelled point from the
    Hessian H of the normalised log-likelihood.
    """
    options = options or FitOptions()
    ma = _validate_memberships(membership_a, data.n, "sender")
    mb = _validate_memberships(membership_b, data.n, "receiver")
    layout = Layout.grouped(ma, mb, data.d_z)
    ev = LikelihoodEvaluator(data, layout)
    if init is not None:
        start = group_start(init, ma, mb, layout)
    else:
        start = layout.pack(CommonParams(np.zeros(data.d_z), 0.5, 0.0), np.zeros(layout.n_a), np.zeros(layout.n_b))

    x, res = maximize(ev, start, options)
    a_vals = np.concatenate([[0.0], x[layout.gamma_start : layout.gamma_start + layout.n_a]])
    b_vals = x[layout.gamma_start + layout.n_a :]
    ma2, a_sorted = _relabel(ma, a_vals)
    mb2, b_sorted = _relabel(mb, b_vals)
    c = a_sorted[0]
    a_sorted, b_sorted = a_sorted - c, b_sorted + c

    theta = CommonParams(x[: data.d_z], x[layout.alpha_index], x[layout.rho_index])
    layout2 = Layout.grouped(ma2, mb2, data.d_z)
    vec = layout2.pack(theta, a_sorted[1:], b_sorted)
    ev2 = LikelihoodEvaluator(data, layout2)
    out = ev2.evaluate(vec, 2)

    fit = GroupedFit(
        theta_hat=theta,
        groups=GroupModel(ma2, mb2, a_sorted, b_sorted),
        vector=vec,
        names=layout2.names(),
        loglik_sum=out.loglik_sum,
        converged=res.converged,
        iterations=res.iterations,
        final_gradient_norm=res.grad_norm,
    )
    # parameters left on their box, named after relabelling
    hit = np.flatnonzero(res.at_bound)
    for idx in hit:
        if idx == layout.alpha_index:
            fit.boundary.append("alpha")
        elif idx == layout.rho_index:
            fit.boundary.append("rho")
        elif idx >= layout.gamma_start + layout.n_a:
            k = idx - layout.gamma_start - layout.n_a + 1
            fit.boundary.append(f"b_{int(mb2[mb == k][0])}")
        elif idx >= layout.gamma_start:
            k = idx - layout.gamma_start + 2
            fit.boundary.append(f"a_{int(ma2[ma == k][0])}")
    info = -out.hess
    eig = np.linalg.eigvalsh(info)
    if eig[0] <= SINGULAR_RATIO * max(eig[-1], 0.0) or not np.all(np.isfinite(eig)):
        fit.singular = True
        return fit
    cov = (2.0 / ev2.dyads.N) * np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    fit.covariance = cov
    fit.standard_errors = np.sqrt(np.diag(cov))
    fit.t_values = vec / fit.standard_errors
    return fit


def bic(loglik_sum: float, d_z: int, k_a: int, k_b: int, n: int) -> float:
    """-2 loglik + (d_z + 1 + k_a + k_b) ln(number of unordered dyads)."""
    if n < 2:
        raise ValueError("need n >= 2")
    return -2.0 * loglik_sum + (d_z + 1 + k_a + k_b) * np.log(n * (n - 1) / 2.0)


@dataclass
class BicGrid:
    k_a_values: list
    k_b_values: list
    table: np.ndarray  # nan where the cell failed
    fits: dict = field(default_factory=dict, repr=False)

    @property
    def best(self) -> tuple[int, int]:
        if np.all(np.isnan(self.table)):
            raise RuntimeError("every cell of the BIC grid failed")
        r, c = np.unravel_index(np.nanargmin(self.table), self.table.shape)
        return self.k_a_values[r], self.k_b_values[c]


def _bic_cell(data, ma, mb, options, step1):
    try:
        fit = fit_grouped(data, ma, mb, options, init=step1)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return None
    return fit


def select_group_counts(
    data: Dataset,
    k_a_range,
    k_b_range,
    options: Optional[FitOptions] = None,
    repartition_iters: int = 2,
    step1: Optional[Step1Fit] = None,
    n_jobs: int = 1,
) -> BicGrid:
    """Step-1 fit once, then segment and fit every (k_a, k_b) cell; return the BIC grid."""
    options = options or FitOptions()
    k_a_values, k_b_values = list(k_a_range), list(k_b_range)
    for k in k_a_values + k_b_values:
        if not 2 <= k <= data.n:
            raise ValueError(f"group counts must lie in [2, {data.n}], got {k}")
    if step1 is None:
        step1 = fit_fixed_effects(data, options)
    seg_a = {k: bs_segment(step1.gamma_hat.a, k, repartition_iters).memberships for k in k_a_values}
    seg_b = {k: bs_segment(step1.gamma_hat.b, k, repartition_iters).memberships for k in k_b_values}
    cells = [(ka, kb) for ka in k_a_values for kb in k_b_values]
    fits = Parallel(n_jobs=n_jobs)(
        delayed(_bic_cell)(data, seg_a[ka], seg_b[kb], options, step1) for ka, kb in cells
    )
    table = np.full((len(k_a_values), len(k_b_values)), np.nan)
    out = {}
    for (ka, kb), fit in zip(cells, fits):
        if fit is None or not fit.converged:
            continue
        table[k_a_values.index(ka), k_b_values.index(kb)] = bic(fit.loglik_sum, data.d_z, ka, kb, data.n)
        out[(ka, kb)] = fit
    return BicGrid(k_a_values, k_b_values, table, out)
