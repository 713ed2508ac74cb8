"""Search direction rules: steepest descent, RMSprop, Adam.

Each rule turns the gradient at the iterate into a descent direction and
is applied exactly once per training iteration, so moment estimates update
once per iteration regardless of how many evaluations the line search
spends afterwards.  The per-rule default step sizes mirror the usual
framework defaults: 0.01 for sgd and rmsprop, 0.001 for adam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRECTION_KINDS = ("sgd", "rmsprop", "adam")

GAMMA_DEFAULTS = {"sgd": 0.01, "rmsprop": 0.01, "adam": 0.001}


@dataclass
class DirectionState:
    kind: str
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.99
    eps_stab: float = 1e-8
    step_count: int = 0
    first_moment: np.ndarray | None = field(default=None, repr=False)
    second_moment: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in DIRECTION_KINDS:
            raise ValueError(f"unknown direction kind {self.kind!r}")

    @property
    def gamma_default(self) -> float:
        return GAMMA_DEFAULTS[self.kind]


def make_direction_state(kind: str) -> DirectionState:
    return DirectionState(kind=kind)


def sgd_direction(grad: np.ndarray) -> np.ndarray:
    return -grad


def rmsprop_direction(state: DirectionState, grad: np.ndarray) -> np.ndarray:
    """Gradient scaled by a running root-mean-square, decay rho."""
    state.step_count += 1
    if state.second_moment is None:
        state.second_moment = np.zeros_like(grad)
    state.second_moment = state.rho * state.second_moment + (1.0 - state.rho) * grad * grad
    return -grad / (np.sqrt(state.second_moment) + state.eps_stab)


def adam_direction(state: DirectionState, grad: np.ndarray) -> np.ndarray:
    """Bias-corrected first/second moment direction."""
    state.step_count += 1
    if state.first_moment is None:
        state.first_moment = np.zeros_like(grad)
        state.second_moment = np.zeros_like(grad)
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    t = state.step_count
    m_hat = state.first_moment / (1.0 - state.beta1 ** t)
    v_hat = state.second_moment / (1.0 - state.beta2 ** t)
    return -m_hat / (np.sqrt(v_hat) + state.eps_stab)


def next_direction(state: DirectionState, grad: np.ndarray) -> np.ndarray:
    """Dispatch on the state's kind; advances the state for stateful rules."""
    if state.kind == "sgd":
        state.step_count += 1
        return sgd_direction(grad)
    if state.kind == "rmsprop":
        return rmsprop_direction(state, grad)
    return adam_direction(state, grad)
