"""Quadratic loss surrogate driven by two directional derivative samples.

Fitting f(alpha) ~ k1*alpha^2 + k2*alpha + k3 through derivative
observations only means fitting the affine model f'(alpha) ~ 2*k1*alpha + k2
through two points; k3 never matters for step-size decisions.  The vanilla
strategy built on this (``gos_step``) spends two fresh evaluations per
search: one at the origin (skippable when the caller already has the
origin gradient) and one at the guess.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateAbscissaeError,
    NonFiniteLossError,
    NotADescentDirectionError,
    ZeroSlopeError,
)
from .oracle import DirectionalSlice, StochasticOracle

# termination labels shared by every strategy
IMMEDIATE_ACCEPT = "immediate-accept"
INTERPOLATED = "interpolated"
EXTRAPOLATION_GUESS = "extrapolation-guess"
BRACKET_CONVERGED = "bracket-converged"
BRACKET_CAPPED = "bracket-capped"
DEGENERATE_RESTART = "degenerate-restart"

TERMINATIONS = (
    IMMEDIATE_ACCEPT,
    INTERPOLATED,
    EXTRAPOLATION_GUESS,
    BRACKET_CONVERGED,
    BRACKET_CAPPED,
    DEGENERATE_RESTART,
)


@dataclass(frozen=True)
class LinearDerivativeModel:
    """Affine derivative model f'(alpha) ~ 2*k1*alpha + k2."""

    k1: float
    k2: float

    def derivative(self, alpha: float) -> float:
        return 2.0 * self.k1 * alpha + self.k2

    def minimizer(self) -> float:
        """Root of the modelled derivative, i.e. the surrogate's stationary point."""
        if self.k1 == 0.0:
            raise ZeroSlopeError("derivative model is constant, no stationary point")
        return -self.k2 / (2.0 * self.k1)


def fit_linear_derivative(alpha0: float, f0p: float, alpha1: float, f1p: float) -> LinearDerivativeModel:
    """Fit the affine derivative model through two (alpha, f') observations."""
    if alpha0 == alpha1:
        raise DegenerateAbscissaeError(f"both observations at alpha = {alpha0}")
    k1 = (f1p - f0p) / (2.0 * (alpha1 - alpha0))
    k2 = f0p - 2.0 * k1 * alpha0
    return LinearDerivativeModel(k1, k2)


def interpolate_sign_change(alpha0: float, f0p: float, alpha1: float, f1p: float) -> float:
    """Step size where the affine derivative model crosses zero.

    Algebraically identical to the fitted model's minimizer, written in the
    update form alpha0 - f0p * (alpha1 - alpha0) / (f1p - f0p).
    """
    if alpha0 == alpha1:
        raise DegenerateAbscissaeError(f"both observations at alpha = {alpha0}")
    if f1p == f0p:
        raise ZeroSlopeError("equal derivatives, interpolation undefined")
    return alpha0 - f0p * (alpha1 - alpha0) / (f1p - f0p)


@dataclass
class LineSearchResult:
    """What a strategy hands back to the training loop.

    gradient_star is the mini-batch gradient evaluated at the accepted
    point when the strategy has one, else None; the loop reuses it as the
    next iteration's origin gradient instead of spending a fresh
    evaluation.
    """

    alpha_star: float
    gradient_star: np.ndarray | None
    evals_used: int
    termination: str

    def __post_init__(self):
        if not (np.isfinite(self.alpha_star) and self.alpha_star >= 0.0):
            raise ValueError(f"alpha_star must be finite and >= 0, got {self.alpha_star}")
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")


def gos_step(oracle: StochasticOracle, x: np.ndarray, d: np.ndarray, alpha1: float,
             origin_gradient: np.ndarray | None = None) -> LineSearchResult:
    """One vanilla surrogate line search along d from x.

    Case analysis on the fresh derivative at the guess alpha1:
      f'(alpha1) >= 0   sign change seen, take the surrogate minimizer
                        clamped into [0, alpha1];
      f'0 < f'1 < 0     still descending but flattening, the minimizer
                        estimate lies beyond alpha1, conservatively accept
                        alpha1;
      f'1 <= f'0        derivative got steeper, the surrogate has no
                        interior minimum, accept alpha1.

    Raises NotADescentDirectionError when the origin derivative is not
    negative; the caller decides how to restart.
    """
    if alpha1 <= 0 or not np.isfinite(alpha1):
        raise ValueError(f"alpha1 must be positive and finite, got {alpha1}")
    slc = DirectionalSlice(x, d, 0.0)
    evals = 0
    if origin_gradient is None:
        ev0 = oracle.evaluate_fresh(slc)
        f0p = ev0.dderiv
        evals += 1
    else:
        f0p = float(d @ origin_gradient)
        if not np.isfinite(f0p):
            raise NonFiniteLossError(f"origin directional derivative is {f0p}")
    if f0p >= 0:
        raise NotADescentDirectionError(f"f'(0) = {f0p:.6e} is not negative")

    ev1 = oracle.evaluate_fresh(slc.at(alpha1))
    evals += 1
    if ev1.dderiv >= 0:
        alpha_star = interpolate_sign_change(0.0, f0p, alpha1, ev1.dderiv)
        alpha_star = min(max(alpha_star, 0.0), alpha1)
        return LineSearchResult(alpha_star, None, evals, INTERPOLATED)
    return LineSearchResult(alpha1, ev1.gradient, evals, EXTRAPOLATION_GUESS)
