"""Step-size baselines: fixed rate, cosine annealing with warm restarts,
and an exponential grow/shrink search on the derivative sign."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteLossError
from .oracle import DirectionalSlice, StochasticOracle
from .surrogate import (
    BRACKET_CAPPED,
    BRACKET_CONVERGED,
    DEGENERATE_RESTART,
    IMMEDIATE_ACCEPT,
    LineSearchResult,
)


def fixed_step(gamma: float) -> float:
    if gamma <= 0 or not np.isfinite(gamma):
        raise ValueError(f"gamma must be positive and finite, got {gamma}")
    return float(gamma)


@dataclass
class CosineSchedule:
    """Cosine annealing with warm restarts, counted in iterations.

    The rate starts at eta_max, follows half a cosine down towards
    eta_min over ``period`` iterations, then restarts with the period
    multiplied by t_mult.
    """

    eta_max: float
    period: int
    eta_min: float = 0.0
    t_mult: int = 2
    t: int = 0

    def __post_init__(self):
        if self.eta_max <= 0 or self.eta_min < 0 or self.eta_min > self.eta_max:
            raise ValueError(
                f"need 0 <= eta_min <= eta_max with eta_max > 0, "
                f"got {self.eta_min}, {self.eta_max}"
            )
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if self.t_mult < 1:
            raise ValueError(f"t_mult must be >= 1, got {self.t_mult}")

    def advance(self) -> None:
        self.t += 1
        if self.t >= self.period:
            self.t = 0
            self.period *= self.t_mult


def cosine_lr(schedule: CosineSchedule) -> float:
    """Current rate; the caller advances the schedule once per iteration."""
    span = schedule.eta_max - schedule.eta_min
    return schedule.eta_min + 0.5 * span * (1.0 + np.cos(np.pi * schedule.t / schedule.period))


@dataclass
class GolsiState:
    """Carried step size for the grow/shrink search."""

    alpha: float
    alpha_min: float = 1e-8
    alpha_max: float = 1e7

    def __post_init__(self):
        if not 0.0 < self.alpha_min < self.alpha_max:
            raise ValueError(
                f"need 0 < alpha_min < alpha_max, got {self.alpha_min}, {self.alpha_max}"
            )
        if not self.alpha_min <= self.alpha <= self.alpha_max:
            raise ValueError(
                f"alpha must start in [{self.alpha_min}, {self.alpha_max}], got {self.alpha}"
            )


def golsi_step(oracle: StochasticOracle, x: np.ndarray, d: np.ndarray,
               g_origin: np.ndarray, state: GolsiState) -> LineSearchResult:
    """Exponential search for the first step with non-negative derivative.

    Starting from the carried step: while the fresh derivative is
    negative, keep doubling; once it flips, the current step is accepted.
    If the very first probe is already non-negative, halve instead until
    the derivative goes negative again and accept the smallest probed step
    that still had a non-negative derivative.  The accepted step becomes
    the carried step for the next call.
    """
    f0p = float(d @ g_origin)
    if not np.isfinite(f0p):
        raise NonFiniteLossError(f"origin directional derivative is {f0p}")
    if f0p >= 0:
        _, g_new = oracle.evaluate_fresh_at(x)
        return LineSearchResult(0.0, g_new, 1, DEGENERATE_RESTART)

    slc = DirectionalSlice(x, d, 0.0)
    alpha = state.alpha
    ev = oracle.evaluate_fresh(slc.at(alpha))
    f = ev.dderiv
    evals = 1
    if f < 0:
        while f < 0 and 2.0 * alpha <= state.alpha_max:
            alpha *= 2.0
            ev = oracle.evaluate_fresh(slc.at(alpha))
            f = ev.dderiv
            evals += 1
        accepted, grad = alpha, ev.gradient
        termination = BRACKET_CONVERGED if f >= 0 else BRACKET_CAPPED
    elif f > 0:
        accepted, grad = alpha, ev.gradient
        termination = BRACKET_CONVERGED
        while f > 0 and alpha / 2.0 >= state.alpha_min:
            alpha /= 2.0
            ev = oracle.evaluate_fresh(slc.at(alpha))
            f = ev.dderiv
            evals += 1
            if f >= 0:
                accepted, grad = alpha, ev.gradient
        if f > 0:
            # halving floor reached without the derivative flipping
            termination = BRACKET_CAPPED
    else:
        accepted, grad = alpha, ev.gradient
        termination = IMMEDIATE_ACCEPT
    state.alpha = accepted
    return LineSearchResult(accepted, grad, evals, termination)
