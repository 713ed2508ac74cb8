"""Gradient-only approximation line search with sign-change bracketing.

Under dynamic mini-batch sub-sampling the loss along a direction is
point-wise discontinuous, so the search does not chase a loss minimum.
It accepts any step whose fresh directional derivative is small in
magnitude relative to the origin derivative (immediate acceptance), and
otherwise brackets a derivative sign change by doubling the step, then
shrinks the bracket with Regula-Falsi updates computed from derivative
values alone.  Accepted steps land inside the band where the sampled
derivative flips sign with non-vanishing probability, which is the
sub-sampled analogue of a stationary point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

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

INITIAL_GUESS_MODES = ("fixed-gamma", "inverse-direction-norm")


@dataclass
class GoalsConfig:
    """Knobs for one search family member.

    c bounds the immediate acceptance band symmetrically; c1/c2 override
    its lower (undershoot) and upper (overshoot) sides separately when
    set.  gamma is the fixed initial guess; the alternative guess mode
    scales inversely with the direction norm.  carry_alpha reuses the last
    accepted step as the next initial guess.
    """

    c: float = 0.9
    c1: float | None = None
    c2: float | None = None
    gamma: float = 0.01
    initial_guess: str = "fixed-gamma"
    carry_alpha: bool = False
    alpha_min: float = 1e-8
    alpha_max: float = 1e7
    epsilon: float = 1e-8
    omega: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must be in (0, 1), got {self.c}")
        for name, value in (("c1", self.c1), ("c2", self.c2)):
            if value is not None and not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {value}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.initial_guess not in INITIAL_GUESS_MODES:
            raise ValueError(f"unknown initial guess mode {self.initial_guess!r}")
        if not 0.0 < self.alpha_min < self.alpha_max:
            raise ValueError(
                f"need 0 < alpha_min < alpha_max, got {self.alpha_min}, {self.alpha_max}"
            )
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    @property
    def c_lower(self) -> float:
        return self.c1 if self.c1 is not None else self.c

    @property
    def c_upper(self) -> float:
        return self.c2 if self.c2 is not None else self.c


# the numbered family members: initial guess mode, carry flag
GOALS_PRESETS = {
    "goals-1": ("fixed-gamma", False),
    "goals-2": ("fixed-gamma", True),
    "goals-3": ("inverse-direction-norm", True),
    "goals-4": ("inverse-direction-norm", False),
}


def goals_preset(name: str, **overrides) -> GoalsConfig:
    """Config for one of the numbered variants, with optional overrides."""
    if name not in GOALS_PRESETS:
        raise ValueError(f"unknown preset {name!r}, expected one of {sorted(GOALS_PRESETS)}")
    mode, carry = GOALS_PRESETS[name]
    return replace(GoalsConfig(initial_guess=mode, carry_alpha=carry), **overrides)


def check_armijo(f0: float, f1: float, alpha1: float, f0p: float, omega: float = 1e-4) -> bool:
    """Sufficient-decrease test f1 <= f0 + omega * alpha1 * f'0.

    Loss magnitudes are unreliable under re-sampling, so nothing in the
    search depends on this; it is provided for deterministic diagnostics.
    """
    return f1 <= f0 + omega * alpha1 * f0p


def check_curvature(f0p: float, f1p: float, c: float = 0.9) -> bool:
    """Weak curvature test f'1 >= c * f'0 (both sides typically negative)."""
    return f1p >= c * f0p


def check_iac(f0p: float, f1p: float, c: float = 0.9,
              c1: float | None = None, c2: float | None = None) -> bool:
    """Immediate acceptance: c1 * f'0 <= f'1 <= -c2 * f'0.

    With a single constant this is |f'1| <= c * |f'0| for a descent
    origin.  The lower side tolerates undershoot (still descending, but
    flattened enough), the upper side tolerates overshoot past the
    sign change.
    """
    lo = (c1 if c1 is not None else c) * f0p
    hi = -(c2 if c2 is not None else c) * f0p
    return lo <= f1p <= hi


def initial_guess(config: GoalsConfig, d: np.ndarray, alpha_prev: float | None = None) -> float:
    """First step size to probe, clamped into [alpha_min, alpha_max].

    A carried alpha_prev of 0 marks a restart after a degenerate
    iteration and falls back to gamma.
    """
    if config.carry_alpha and alpha_prev is not None:
        guess = alpha_prev if alpha_prev > 0 else config.gamma
    elif config.initial_guess == "fixed-gamma":
        guess = config.gamma
    else:
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            raise ValueError("direction must be non-zero")
        guess = 1.0 / norm
    return min(max(guess, config.alpha_min), config.alpha_max)


def bracket(oracle: StochasticOracle, x: np.ndarray, d: np.ndarray,
            alpha0: float, alpha1: float, f0p: float, f1p: float,
            config: GoalsConfig, trace: list | None = None) -> LineSearchResult:
    """Bracket a directional-derivative sign change and shrink onto it.

    Growth phase: while the upper-end derivative stays below the
    undershoot threshold c_lower * f'0 (both negative), slide the lower
    end up and double the upper end, stopping once doubling would pass
    alpha_max.  Shrink phase: Regula-Falsi secant updates on the two
    derivative observations; each probe replaces the end whose derivative
    shares its sign, so a valid bracket stays valid.  The loop stops when
    the probe derivative clears -c_upper * f'0, the ends stop straddling
    zero, or their derivatives nearly coincide.

    Returns the final probe as alpha_star together with a gradient freshly
    evaluated there; termination says whether the growth cap was hit.
    When ``trace`` is a list, growth and Regula-Falsi steps are appended
    to it as tuples for diagnostics.
    """
    if alpha0 < 0 or not alpha1 > alpha0:
        raise ValueError(f"need 0 <= alpha0 < alpha1, got {alpha0}, {alpha1}")
    slc = DirectionalSlice(x, d, 0.0)
    c_lo, c_up = config.c_lower, config.c_upper
    evals = 0

    alpha_l, fl = float(alpha0), float(f0p)
    alpha_u, fu = float(alpha1), float(f1p)
    while fu < c_lo * f0p and 2.0 * alpha_u < config.alpha_max:
        alpha_l, fl = alpha_u, fu
        alpha_u = 2.0 * alpha_u
        fu = oracle.evaluate_fresh(slc.at(alpha_u)).dderiv
        evals += 1
        if trace is not None:
            trace.append(("grow", alpha_l, alpha_u, fl, fu))
    capped = fu < c_lo * f0p

    alpha_t, ft = alpha_u, fu
    while ft > -c_up * f0p and fu * fl < 0.0 and abs(fu - fl) > config.epsilon:
        alpha_t = (alpha_l * fu - alpha_u * fl) / (fu - fl)
        if trace is not None:
            trace.append(("regula-falsi", alpha_l, alpha_u, fl, fu, alpha_t))
        ft = oracle.evaluate_fresh(slc.at(alpha_t)).dderiv
        evals += 1
        if ft * fl < 0.0:
            alpha_u, fu = alpha_t, ft
        else:
            alpha_l, fl = alpha_t, ft

    alpha_star = min(max(alpha_t, config.alpha_min), config.alpha_max)
    final = oracle.evaluate_fresh(slc.at(alpha_star))
    evals += 1
    termination = BRACKET_CAPPED if capped else BRACKET_CONVERGED
    return LineSearchResult(alpha_star, final.gradient, evals, termination)


def goals_step(oracle: StochasticOracle, x: np.ndarray, d: np.ndarray,
               g_origin: np.ndarray, config: GoalsConfig,
               alpha_prev: float | None = None,
               trace: list | None = None) -> LineSearchResult:
    """One full search along d from x.

    The origin derivative comes from ``g_origin``, the gradient the caller
    already holds at x (typically last iteration's accepted gradient), so
    probing the origin costs nothing.  Flow: degenerate origins (flat or
    uphill within epsilon) take no step and only refresh the gradient;
    otherwise probe the initial guess, accept it immediately if its
    derivative magnitude collapsed enough, else bracket.

    The result's gradient_star is always a fresh gradient at the accepted
    point, ready to seed the next iteration.
    """
    slc = DirectionalSlice(x, d, 0.0)
    f0p = float(d @ g_origin)
    if not np.isfinite(f0p):
        raise NonFiniteLossError(f"origin directional derivative is {f0p}")
    if f0p > -config.epsilon:
        # flat or ascending start under this batch: do not trust the
        # direction, re-sample the gradient in place and let the caller
        # build the next direction from it
        _, g_new = oracle.evaluate_fresh_at(x)
        return LineSearchResult(0.0, g_new, 1, DEGENERATE_RESTART)

    alpha1 = initial_guess(config, d, alpha_prev)
    ev1 = oracle.evaluate_fresh(slc.at(alpha1))
    if check_iac(f0p, ev1.dderiv, config.c, config.c1, config.c2):
        return LineSearchResult(alpha1, ev1.gradient, 1, IMMEDIATE_ACCEPT)

    inner = bracket(oracle, x, d, 0.0, alpha1, f0p, ev1.dderiv, config, trace=trace)
    return LineSearchResult(
        inner.alpha_star, inner.gradient_star, inner.evals_used + 1, inner.termination
    )
