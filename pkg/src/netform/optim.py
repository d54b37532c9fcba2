"""Damped Newton ascent with step halving and box bounds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la


@dataclass
class NewtonResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    hess: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    at_bound: np.ndarray
    history: list


def _direction(g, H):
    """Newton direction if it ascends, otherwise gradient scaled by |diag H|."""
    try:
        with warnings.catch_warnings():
            # near-singular systems are caught by the ascent check below
            warnings.simplefilter("ignore", la.LinAlgWarning)
            d = -la.solve(H, g, assume_a="sym", check_finite=True)
        if np.all(np.isfinite(d)) and g @ d > 0:
            return d, True
    except (la.LinAlgError, ValueError):
        pass
    return g / np.maximum(np.abs(np.diag(H)), 1e-8), False


def newton_ascent(
    fun: Callable,
    x0,
    *,
    lower=None,
    upper=None,
    free=None,
    max_iterations: int = 200,
    gradient_tol: float = 1e-8,
    step_halving_max: int = 40,
    max_step: float = 1.0,
) -> NewtonResult:
    """Maximise ``fun`` from ``x0``.

    ``fun(x, order)`` returns ``(value, grad, hess)``; with ``order=0`` only
    the value is used. Coordinates outside ``free`` stay at their starting
    values. Iterates are projected into ``[lower, upper]``, no coordinate
    moves more than ``max_step`` per iteration, and a step is only accepted
    if it does not lower the objective.
    """
    x = np.array(x0, dtype=float)
    p = x.size
    free = np.ones(p, bool) if free is None else np.asarray(free, bool)
    lower = np.full(p, -np.inf) if lower is None else np.asarray(lower, float)
    upper = np.full(p, np.inf) if upper is None else np.asarray(upper, float)
    x = np.clip(x, lower, upper)

    f, g, H = fun(x, 2)
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    history = [f]
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        pinned = ((x <= lower) & (g < 0)) | ((x >= upper) & (g > 0))
        act = free & ~pinned
        gnorm = float(np.max(np.abs(g[act]))) if act.any() else 0.0
        if gnorm <= gradient_tol:
            converged = True
            it -= 1
            break

        idx = np.flatnonzero(act)
        d_act, newton = _direction(g[idx], H[np.ix_(idx, idx)])
        accepted = False
        for attempt in range(2):
            step = np.zeros(p)
            step[idx] = d_act
            # trust-region style cap: long steps tend to land in a clipped corner
            big = np.max(np.abs(step))
            if big > max_step:
                step *= max_step / big
            t = 1.0
            for _ in range(step_halving_max):
                xn = np.clip(x + t * step, lower, upper)
                fn = fun(xn, 0)[0]
                if np.isfinite(fn) and fn >= f:
                    accepted = True
                    break
                t *= 0.5
            if accepted or not newton:
                break
            d_act = g[idx] / np.maximum(np.abs(np.diag(H)[idx]), 1e-8)
            newton = False
        if not accepted:
            break
        x = xn
        f, g, H = fun(x, 2)
        history.append(f)

    pinned = ((x <= lower) & (g < 0)) | ((x >= upper) & (g > 0))
    act = free & ~pinned
    gnorm = float(np.max(np.abs(g[act]))) if act.any() else 0.0
    converged = converged or gnorm <= gradient_tol
    at_bound = free & ((x <= lower) | (x >= upper))
    return NewtonResult(x, f, g, H, converged, it, gnorm, at_bound, history)
