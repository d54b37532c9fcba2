"""First-step maximum likelihood with one sender and one receiver effect per agent."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .likelihood import LikelihoodEvaluator, Layout
from .model import CommonParams, Dataset, HeterogeneityVector
from .optim import newton_ascent

EFFECT_BOUND = 10.0
LOG_ALPHA_BOUNDS = (-12.0, 4.0)
ATANH_RHO_BOUND = 5.0


@dataclass
class FitOptions:
    max_iterations: int = 200
    gradient_tol: float = 1e-8
    step_halving_max: int = 40
    init: str = "degree"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.gradient_tol <= 0:
            raise ValueError("gradient_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.init not in ("degree", "zero"):
            raise ValueError(f"unknown init strategy {self.init!r}")


@dataclass
class Step1Fit:
    theta_hat: CommonParams
    gamma_hat: HeterogeneityVector
    loglik_sum: float
    converged: bool
    iterations: int
    final_gradient_norm: float
    separated: list = field(default_factory=list)
    boundary: list = field(default_factory=list)

    @property
    def separation_detected(self) -> bool:
        return bool(self.separated)


class NaturalScaleObjective:
    """Wraps an evaluator so that alpha = exp(w) and rho = tanh(psi).

    Chain rule: first derivatives pick up d(alpha)/dw = alpha and
    d(rho)/dpsi = 1 - rho^2; the Hessian also gets the curvature terms
    grad * d2(param)/d(t)^2 on the diagonal.
    """

    def __init__(self, evaluator: LikelihoodEvaluator):
        self.ev = evaluator
        self.ia = evaluator.layout.alpha_index
        self.ir = evaluator.layout.rho_index

    def to_natural(self, t):
        x = np.array(t, dtype=float)
        x[self.ia] = np.exp(t[self.ia])
        x[self.ir] = np.tanh(t[self.ir])
        return x

    def to_internal(self, x):
        t = np.array(x, dtype=float)
        t[self.ia] = np.log(x[self.ia])
        t[self.ir] = np.arctanh(x[self.ir])
        return t

    def __call__(self, t, order):
        x = self.to_natural(t)
        out = self.ev.evaluate(x, order)
        N = self.ev.dyads.N
        value = 2.0 * out.loglik_sum / N
        if order == 0:
            return value, None, None
        alpha, rho = x[self.ia], x[self.ir]
        jac = np.ones_like(x)
        jac[self.ia] = alpha
        jac[self.ir] = 1.0 - rho * rho
        g = out.grad * jac
        H = None
        if order >= 2:
            H = out.hess * jac[:, None] * jac[None, :]
            H[self.ia, self.ia] += out.grad[self.ia] * alpha
            H[self.ir, self.ir] += out.grad[self.ir] * (-2.0 * rho * (1.0 - rho * rho))
        return value, g, H


def degree_start(data: Dataset) -> tuple[CommonParams, HeterogeneityVector]:
    """Start from probit-transformed one-way out/in rates."""
    n = data.n
    y = data.network.oneway().astype(float)
    lo, hi = 0.5 / (n - 1), 1.0 - 0.5 / (n - 1)
    out_rate = np.clip(y.sum(axis=1) / (n - 1), lo, hi)
    in_rate = np.clip(y.sum(axis=0) / (n - 1), lo, hi)
    a = ndtri(out_rate)
    a = a - a.mean()
    b = ndtri(in_rate)
    theta = CommonParams(np.zeros(data.d_z), 0.5, 0.0)
    return theta, HeterogeneityVector.normalized(a, b)


def bounds_for(layout: Layout) -> tuple[np.ndarray, np.ndarray]:
    p = layout.size
    lower = np.full(p, -np.inf)
    upper = np.full(p, np.inf)
    lower[layout.gamma_start:] = -EFFECT_BOUND
    upper[layout.gamma_start:] = EFFECT_BOUND
    lower[layout.alpha_index], upper[layout.alpha_index] = LOG_ALPHA_BOUNDS
    lower[layout.rho_index], upper[layout.rho_index] = -ATANH_RHO_BOUND, ATANH_RHO_BOUND
    return lower, upper


def maximize(evaluator: LikelihoodEvaluator, start, options: FitOptions, fix_rho: bool = False):
    """Run Newton ascent on the transformed scale; returns (natural vector, NewtonResult)."""
    layout = evaluator.layout
    obj = NaturalScaleObjective(evaluator)
    lower, upper = bounds_for(layout)
    free = np.ones(layout.size, bool)
    if fix_rho:
        free[layout.rho_index] = False
    t0 = np.clip(obj.to_internal(np.asarray(start, dtype=float)), lower, upper)
    res = newton_ascent(
        obj, t0, lower=lower, upper=upper, free=free,
        max_iterations=options.max_iterations,
        gradient_tol=options.gradient_tol,
        step_halving_max=options.step_halving_max,
    )
    return obj.to_natural(res.x), res


def fit_fixed_effects(
    data: Dataset,
    options: Optional[FitOptions] = None,
    *,
    evaluator: Optional[LikelihoodEvaluator] = None,
    init_vector=None,
    fix_rho: bool = False,
) -> Step1Fit:
    """Maximise the likelihood over (beta, alpha, rho, A_2..A_n, B_1..B_n).

    Agents whose effect ends on the +-10 box are listed in ``separated`` as
    (agent, "sender"|"receiver") with 1-based agent ids; this happens when an
    agent's one-way links are all-or-nothing. ``boundary`` names alpha or rho
    if either ends on its box, which small samples can produce genuinely.
    """
    options = options or FitOptions()
    if data.n < 3:
        raise ValueError("need at least 3 agents to estimate agent effects")
    layout = Layout.fixed_effects(data.n, data.d_z)
    ev = evaluator or LikelihoodEvaluator(data, layout)
    if init_vector is None:
        if options.init == "degree":
            theta0, gamma0 = degree_start(data)
        else:
            theta0 = CommonParams(np.zeros(data.d_z), 0.5, 0.0)
            gamma0 = HeterogeneityVector(np.zeros(data.n), np.zeros(data.n))
        init_vector = layout.pack_gamma(theta0, gamma0)

    x, res = maximize(ev, init_vector, options, fix_rho=fix_rho)
    theta, gamma = layout.split(x)

    separated = []
    for col in np.flatnonzero(res.at_bound[layout.gamma_start:]) + layout.gamma_start:
        k = col - layout.gamma_start
        if k < data.n - 1:
            separated.append((int(k + 2), "sender"))
        else:
            separated.append((int(k - (data.n - 1) + 1), "receiver"))
    boundary = [name for name, idx in (("alpha", layout.alpha_index), ("rho", layout.rho_index)) if res.at_bound[idx]]
    return Step1Fit(
        theta_hat=theta,
        gamma_hat=gamma,
        loglik_sum=res.value * ev.dyads.N / 2.0,
        converged=res.converged,
        iterations=res.iterations,
        final_gradient_norm=res.grad_norm,
        separated=separated,
        boundary=boundary,
    )
